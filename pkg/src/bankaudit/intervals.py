"""Plausible size intervals per category, judged or hand-set.

An interval comes from three independent size estimates (integer
centimeters) for a category name. Each estimate d becomes a per-run band
[0.7 d, 1.3 d] in meters, and the category interval is the union of the
three bands. The arithmetic uses 7*d/1000 and 13*d/1000 so round numbers
like 0.70 and 1.56 compare exactly.
"""

from __future__ import annotations

import json
import logging
import os
import time
from dataclasses import dataclass

import regex as re

from .errors import (
    EmptyRuns,
    IntervalError,
    JudgeUnavailable,
    MalformedReply,
    NoInteger,
    NonPositive,
    NonPositiveEstimate,
)

log = logging.getLogger("bankaudit.intervals")

PROVENANCES = ("judged", "manual")

# few-shot template for text-only judging; the reply must be a bare integer
TEXT_PROMPT = (
    "You are a precise database of physical object length dimensions.\n"
    "Respond ONLY with the maximum dimension (length, width, or height) of the\n"
    "given real-world object in centimeters.\n"
    "Provide a realistic, common value as an integer. Do not write any other words.\n"
    "\n"
    "Object: soda can\n"
    "Target Longest Dimension (centimeters): 12\n"
    "\n"
    "Object: car\n"
    "Target Longest Dimension (centimeters): 450\n"
    "\n"
    "Object: office chair\n"
    "Target Longest Dimension (centimeters): 110\n"
    "\n"
    "Object: standard king bed\n"
    "Target Longest Dimension (centimeters): 200\n"
    "\n"
    "Object: table\n"
    "Target Longest Dimension (centimeters): 150\n"
    "\n"
    "Object: shotgun\n"
    "Target Longest Dimension (centimeters): 100\n"
    "\n"
    "Object: {category}\n"
    "Target Longest Dimension (centimeters):"
)

# image-conditioned judging; the size is read from the MAX_SIZE_CM line
VISION_PROMPT = (
    "Analyze this image and provide:\n"
    "1. A brief description of the object shown (1-2 sentences).\n"
    "2. The realistic maximum dimension (length, width, or height - whichever\n"
    "   is largest) this object would have in the real world, in centimeters.\n"
    "\n"
    "Respond in this exact format:\n"
    "DESCRIPTION: [your description here]\n"
    "MAX_SIZE_CM: [integer number only]\n"
    "\n"
    "Examples of realistic sizes:\n"
    "- A soda can: 12 cm\n"
    "- A car: 450 cm\n"
    "- An office chair: 110 cm\n"
    "- A dining table: 150 cm\n"
    "- A smartphone: 16 cm\n"
    "- A house: 1000 cm\n"
    "- A person: 180 cm\n"
    "\n"
    "Be precise and realistic with the size estimation based on what the object actually is."
)

_INT_RE = re.compile(r"[-+]?\d+")
_SIZE_LINE_RE = re.compile(r"MAX_SIZE_CM\s*:\s*([-+]?\d+)")


@dataclass(frozen=True)
class PlausibleInterval:
    """[lower, upper] plausible size band in meters for one category."""

    category: str
    lower: float
    upper: float
    provenance: str = "manual"  # judged | manual
    run_estimates_cm: tuple | None = None

    def __post_init__(self):
        if not self.category:
            raise IntervalError("category name is empty")
        if self.provenance not in PROVENANCES:
            raise IntervalError(f"provenance must be one of {PROVENANCES}")
        if not (0.0 < self.lower < self.upper):
            raise IntervalError(
                f"{self.category}: need 0 < lower < upper, got [{self.lower}, {self.upper}]"
            )
        if self.provenance == "judged":
            if not self.run_estimates_cm:
                raise IntervalError(f"{self.category}: judged interval has no run estimates")
            lo = 7 * min(self.run_estimates_cm) / 1000
            hi = 13 * max(self.run_estimates_cm) / 1000
            if self.lower != lo or self.upper != hi:
                raise IntervalError(
                    f"{self.category}: bounds [{self.lower}, {self.upper}] do not match "
                    f"run estimates (expected [{lo}, {hi}])"
                )

    @property
    def half_width(self) -> float:
        return (self.upper - self.lower) / 2.0

    @property
    def run_estimates(self) -> tuple | None:
        """Run estimates converted to meters, or None for manual intervals."""
        if self.run_estimates_cm is None:
            return None
        return tuple(d / 100 for d in self.run_estimates_cm)


def interval_from_runs(estimates_cm, category: str = "") -> PlausibleInterval:
    """Union of per-run bands [0.7 d, 1.3 d] over integer-cm estimates.

    {100, 110, 120} cm gives [0.70, 1.56] m; three identical 100 cm runs
    give [0.70, 1.30] m.
    """
    runs = tuple(int(d) for d in estimates_cm)
    if not runs:
        raise EmptyRuns("no run estimates")
    for d in runs:
        if d <= 0:
            raise NonPositiveEstimate(d)
    return PlausibleInterval(
        category=category or "uncategorized",
        lower=7 * min(runs) / 1000,
        upper=13 * max(runs) / 1000,
        provenance="judged",
        run_estimates_cm=runs,
    )


# --- judge protocol ---------------------------------------------------------

@dataclass
class JudgeConfig:
    endpoint_url: str
    model_name: str
    temperature: float = 0.1
    runs: int = 3
    mode: str = "text"  # text | vision
    timeout: float = 30.0
    max_retries: int = 2
    inter_request_delay: float = 0.5


def build_prompt(category: str, mode: str = "text") -> str:
    """Prompt for one judge run. Vision mode pairs the prompt with an image
    attached at the transport layer, so the text itself has no slot for the
    category."""
    if not category:
        raise IntervalError("category name is empty")
    if mode == "text":
        return TEXT_PROMPT.format(category=category)
    if mode == "vision":
        return VISION_PROMPT
    raise ValueError(f"unknown judge mode {mode!r}")


def parse_judge_reply(reply: str, mode: str = "text") -> int:
    """Integer centimeters from a judge reply.

    Text mode takes the first integer anywhere in the reply; vision mode
    requires a MAX_SIZE_CM line. Non-positive values are rejected.
    """
    if mode == "text":
        m = _INT_RE.search(reply)
    elif mode == "vision":
        m = _SIZE_LINE_RE.search(reply)
    else:
        raise ValueError(f"unknown judge mode {mode!r}")
    if m is None:
        raise NoInteger(f"no usable integer in reply: {reply[:80]!r}")
    value = int(m.group(1) if mode == "vision" else m.group(0))
    if value <= 0:
        raise NonPositive(f"judge returned non-positive size {value}")
    return value


class HttpChatTransport:
    """Minimal chat-completions client for the judge endpoint.

    Reads the bearer token from AUDIT_LLM_API_KEY. Kept tiny on purpose;
    tests substitute a fake transport.
    """

    def __init__(self, config: JudgeConfig):
        self.config = config

    def complete(self, prompt: str) -> str:
        import requests

        headers = {"Content-Type": "application/json"}
        key = os.environ.get("AUDIT_LLM_API_KEY")
        if key:
            headers["Authorization"] = f"Bearer {key}"
        resp = requests.post(
            self.config.endpoint_url,
            json={
                "model": self.config.model_name,
                "temperature": self.config.temperature,
                "messages": [{"role": "user", "content": prompt}],
            },
            headers=headers,
            timeout=self.config.timeout,
        )
        resp.raise_for_status()
        return resp.json()["choices"][0]["message"]["content"]


def derive_interval(category: str, config: JudgeConfig, transport=None) -> PlausibleInterval:
    """Run the judge config.runs times and fold the estimates into an interval.

    Each run retries transport errors up to max_retries before raising
    JudgeUnavailable; replies that never parse raise MalformedReply.
    """
    if transport is None:
        transport = HttpChatTransport(config)
    prompt = build_prompt(category, config.mode)
    estimates = []
    for run in range(config.runs):
        last_exc = None
        value = None
        for attempt in range(config.max_retries + 1):
            if (run or attempt) and config.inter_request_delay > 0:
                time.sleep(config.inter_request_delay)
            try:
                reply = transport.complete(prompt)
            except Exception as exc:
                last_exc = exc
                log.warning("judge transport failed (run %d attempt %d): %s", run, attempt, exc)
                continue
            try:
                value = parse_judge_reply(reply, config.mode)
                break
            except (NoInteger, NonPositive) as exc:
                last_exc = exc
                log.warning("judge reply unusable (run %d attempt %d): %s", run, attempt, exc)
        if value is None:
            if isinstance(last_exc, (NoInteger, NonPositive)):
                raise MalformedReply(
                    f"{category}: run {run + 1} never produced a usable size: {last_exc}"
                ) from last_exc
            raise JudgeUnavailable(
                f"{category}: run {run + 1} failed after {config.max_retries + 1} attempts: {last_exc}"
            ) from last_exc
        estimates.append(value)
    return interval_from_runs(estimates, category)


# --- persistence ------------------------------------------------------------

def save_intervals(intervals, path) -> None:
    """Write intervals as {version, entries: [...]}, entries sorted by category."""
    entries = []
    for iv in sorted(intervals, key=lambda iv: iv.category):
        entry = {
            "category": iv.category,
            "lower_m": iv.lower,
            "upper_m": iv.upper,
            "provenance": iv.provenance,
        }
        if iv.run_estimates_cm is not None:
            entry["run_estimates_cm"] = list(iv.run_estimates_cm)
        entries.append(entry)
    payload = {"version": 1, "entries": entries}
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_intervals(path) -> dict:
    """Read an interval file into {category: PlausibleInterval}."""
    with open(path, encoding="utf-8") as fh:
        payload = json.load(fh)
    if payload.get("version") != 1:
        raise IntervalError(f"unsupported interval file version {payload.get('version')!r}")
    out = {}
    for entry in payload.get("entries", []):
        runs = entry.get("run_estimates_cm")
        iv = PlausibleInterval(
            category=entry["category"],
            lower=float(entry["lower_m"]),
            upper=float(entry["upper_m"]),
            provenance=entry.get("provenance", "manual"),
            run_estimates_cm=tuple(runs) if runs else None,
        )
        if iv.category in out:
            raise IntervalError(f"duplicate interval for category {iv.category!r}")
        out[iv.category] = iv
    return out


def bundled_intervals() -> dict:
    """Hand-set intervals for the nine stock categories."""
    from importlib import resources

    with resources.files("bankaudit.data").joinpath("category_intervals.json").open(
        encoding="utf-8"
    ) as fh:
        payload = json.load(fh)
    return {
        e["category"]: PlausibleInterval(
            category=e["category"],
            lower=float(e["lower_m"]),
            upper=float(e["upper_m"]),
            provenance="manual",
        )
        for e in payload["entries"]
    }
