"""Full-bank audit orchestration, dashboard aggregation, and the CLI.

run_audit walks a manifest, audits each asset (geometry health, scale
plausibility, anchor placement, hull fidelity, text stats, optional
forward-axis check), folds the per-asset records into a dashboard, and
emit_report writes machine- and human-readable files. Per-asset failures
never abort a run; they become typed failure entries.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import geometry, kernels
from ._version import __version__
from .anchor_metrics import AnchorReport, ForwardAxisResult, anchor_error, forward_axis_audit
from .crossmodal import (
    COHERENCE_PAIRS,
    CoherenceStats,
    coherence_stats,
    load_embeddings,
    load_query_meta,
    retrieval,
)
from .errors import (
    BankAuditError,
    ClassifierUnavailable,
    EmptyDataset,
    IoFailure,
    MissingInterval,
    NoOverlap,
)
from .geometry import HealthFlags, HullReport
from .ingest import MeshGeometry, extract_geometry, load_manifest, parse_glb
from .intervals import JudgeConfig, PlausibleInterval, derive_interval, load_intervals, save_intervals
from .scale_metrics import (
    DECAY_KINDS,
    AssetMeasurement,
    CategoryScaleStats,
    SensitivityReport,
    category_stats,
    scale_gate,
    sensitivity_report,
    sps,
    trimmed_mean,
)
from .text_metrics import (
    KeywordBanks,
    TextStats,
    TokenizerModel,
    bundled_banks,
    bundled_stopwords,
    bundled_tokenizer,
    load_banks,
    load_stopwords,
    load_tokenizer,
    text_stats,
)

log = logging.getLogger("bankaudit.audit")

GATE_NAMES = ("geometric", "scale", "forward_axis")

# fixed histogram binning so emitted data files are comparable across runs
HEIGHT_BIN_EDGES = np.logspace(-2, 2, 33)  # 32 log bins over [0.01 m, 100 m]
FACE_BIN_EDGES = np.logspace(0, 7, 36)  # 35 log bins over [1, 1e7] triangles


@dataclass
class AuditConfig:
    decay: str = "gaussian"
    trim: float = 0.05
    axis: str = "z_height"  # z_height | max_extent
    anchor_mode: str = "declared"  # declared | nearest_canonical
    anchor_cap: float = 100.0
    robust_trim: float = 1.0
    degenerate_max: float = 0.01
    face_band: tuple = (100, 200000)
    require_watertight: bool = True
    allow_missing_intervals: bool = False
    compute_hulls: bool = True
    jobs: int = 1
    epoch: int | None = None  # fixes the report timestamp for determinism
    assets_dir: str | None = None
    tokenizer: TokenizerModel | None = None
    stopwords: frozenset | None = None
    banks: KeywordBanks | None = None
    embeddings_path: str | None = None
    # callable (asset_id, mesh, rotation_k) -> bool, or None to skip the gate
    classifier: object = None

    def resolved_tokenizer(self) -> TokenizerModel:
        return self.tokenizer if self.tokenizer is not None else bundled_tokenizer()

    def resolved_stopwords(self) -> frozenset:
        return self.stopwords if self.stopwords is not None else bundled_stopwords()

    def resolved_banks(self) -> KeywordBanks:
        return self.banks if self.banks is not None else bundled_banks()

    def flags_dict(self) -> dict:
        """Behavior-affecting knobs, echoed into reports and fingerprints."""
        return {
            "decay": self.decay,
            "trim": self.trim,
            "axis": self.axis,
            "anchor_mode": self.anchor_mode,
            "anchor_cap": self.anchor_cap,
            "robust_trim": self.robust_trim,
            "degenerate_max": self.degenerate_max,
            "face_band": list(self.face_band),
            "require_watertight": self.require_watertight,
            "allow_missing_intervals": self.allow_missing_intervals,
            "compute_hulls": self.compute_hulls,
        }


@dataclass
class AuditRecord:
    asset_id: str
    category: str
    subcategory: str
    measurement: AssetMeasurement | None
    interval: PlausibleInterval | None
    sps: dict | None  # decay kind -> score, all three kinds
    health: HealthFlags
    anchor: AnchorReport
    hull: HullReport | None
    hull_error: str | None
    text: TextStats
    tokens: tuple  # meaningful tokens, kept so vocab_size is recomputable
    texture_count: int
    texture_dims: tuple  # ((w, h), ...)
    forward_axis: ForwardAxisResult | None
    gate_results: dict = field(default_factory=dict)


@dataclass(frozen=True)
class AssetFailure:
    asset_id: str
    stage: str  # ingest | health | measure | anchor | text | gates
    error_type: str
    message: str


@dataclass
class Dashboard:
    """Bank-level aggregates; percentages on a 0..100 scale."""

    n_assets: int
    n_failures: int
    mean_sps: float | None  # pooled, configured decay
    mean_cv: float | None  # unweighted mean of per-category CVs
    pct_plausible: float | None  # pooled over scored records
    pct_watertight: float
    pct_manifold: float
    pct_winding_consistent: float
    mean_degenerate_fraction: float
    mean_face_count: float
    pct_has_uv: float
    mean_texture_size: float | None
    mean_anchor_error: float
    median_anchor_error: float
    pct_anchor_out_of_box: float
    pct_anchor_under_1cm: float
    hull_mean_triangles: float | None
    hull_p95_triangles: float | None
    hull_median_coverage: float | None
    hull_mean_containment: float | None  # percent
    mean_description_tokens: float
    vocab_size: int
    mean_concept_density: float
    coherence_text_3d_mean: float | None
    coherence_text_3d_std: float | None
    gate_pass_rate: float


@dataclass
class AuditResult:
    records: list  # manifest order
    failures: list
    dashboard: Dashboard
    per_category: dict  # category -> CategoryScaleStats (configured decay)
    sensitivity: SensitivityReport | None
    coherence: dict  # pair -> CoherenceStats, for pairs that could be computed
    config: AuditConfig
    fingerprints: dict
    generated_at: int


# --- fingerprints -----------------------------------------------------------

def _sha256(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def _canonical_json(obj) -> bytes:
    return json.dumps(obj, sort_keys=True, separators=(",", ":")).encode("utf-8")


def fingerprints(intervals: dict, config: AuditConfig) -> dict:
    """Hashes of every input that changes audit semantics."""
    iv_payload = [
        {
            "category": iv.category,
            "lower_m": iv.lower,
            "upper_m": iv.upper,
            "provenance": iv.provenance,
            "run_estimates_cm": list(iv.run_estimates_cm) if iv.run_estimates_cm else None,
        }
        for iv in sorted(intervals.values(), key=lambda iv: iv.category)
    ]
    banks = config.resolved_banks()
    stops = sorted(config.resolved_stopwords())
    out = {
        "intervals": _sha256(_canonical_json(iv_payload)),
        "banks": _sha256(_canonical_json({a: list(w) for a, w in banks.banks.items()})),
        "stopwords": _sha256("\n".join(stops).encode("utf-8")),
    }
    out["config"] = _sha256(_canonical_json({"flags": config.flags_dict(), "inputs": out}))
    return out


# --- gates ------------------------------------------------------------------

def curation_gates(record: AuditRecord, config: AuditConfig) -> dict:
    """The three release gates for one record: pass / fail / skipped.

    Geometric: watertight (or manifold under the configured relaxation),
    degenerate fraction at most the threshold, face count inside the band.
    Scale: the [l/3, 3u] envelope, skipped without an interval or
    measurement. Forward axis: classifier outcome, skipped when absent.
    """
    h = record.health
    closed_ok = h.watertight or (not config.require_watertight and h.manifold)
    lo, hi = config.face_band
    geometric = (
        closed_ok
        and h.degenerate_fraction <= config.degenerate_max
        and lo <= h.face_count <= hi
    )
    gates = {"geometric": "pass" if geometric else "fail"}

    if record.measurement is None or record.interval is None:
        gates["scale"] = "skipped"
    else:
        gates["scale"] = "pass" if scale_gate(record.measurement.x, record.interval) else "fail"

    if record.forward_axis is None:
        gates["forward_axis"] = "skipped"
    elif record.forward_axis.status in ("accepted", "rotated"):
        gates["forward_axis"] = "pass"
    else:
        gates["forward_axis"] = "fail"
    return gates


def record_passes(record: AuditRecord) -> bool:
    """An asset clears curation when no evaluated gate failed."""
    return all(v != "fail" for v in record.gate_results.values())


# --- per-asset audit --------------------------------------------------------

def _resolve(base: Path, rel: str) -> Path:
    p = Path(rel)
    return p if p.is_absolute() else base / p


def _load_hull_file(path: Path) -> MeshGeometry:
    if "#" in str(path):
        raise IoFailure(
            f"hull path {path} uses in-container addressing; supply a sibling hull file"
        )
    mesh, _ = extract_geometry(parse_glb(path.read_bytes()))
    return mesh


def _audit_one(entry, interval, config: AuditConfig, base_dir: Path):
    """Audit one manifest entry; returns (record, None) or (None, failure)."""
    stage = "ingest"
    try:
        glb_path = _resolve(base_dir, entry.glb_path)
        try:
            data = glb_path.read_bytes()
        except OSError as exc:
            raise IoFailure(f"cannot read {glb_path}: {exc}") from exc
        mesh, probe = extract_geometry(parse_glb(data))

        stage = "health"
        flags = geometry.health(mesh)

        stage = "measure"
        x = geometry.measure(mesh, config.axis)
        measurement = None
        scores = None
        if x > 0:
            measurement = AssetMeasurement(asset_id=entry.asset_id, x=x, axis=config.axis)
            if interval is not None:
                scores = {kind: sps(x, interval, kind) for kind in DECAY_KINDS}

        stage = "anchor"
        anchor = anchor_error(
            entry.asset_id, mesh, entry.anchor_type,
            mode=config.anchor_mode, cap=config.anchor_cap,
            robust_trim=config.robust_trim, flags=flags,
        )

        stage = "hull"
        hull_rep = None
        hull_err = None
        if config.compute_hulls:
            try:
                hull_mesh = None
                if entry.hull_path:
                    hull_mesh = _load_hull_file(_resolve(base_dir, entry.hull_path))
                hull_rep = geometry.hull_report(mesh, hull_mesh)
            except (BankAuditError, ValueError) as exc:
                hull_err = f"{type(exc).__name__}: {exc}"

        stage = "text"
        stats, tokens = text_stats(
            entry.asset_id, entry.description,
            config.resolved_tokenizer(), config.resolved_stopwords(), config.resolved_banks(),
        )

        stage = "forward_axis"
        fwd = None
        if config.classifier is not None:
            bound = (lambda m, k, _aid=entry.asset_id: config.classifier(_aid, m, k))
            try:
                fwd = forward_axis_audit(entry.asset_id, mesh, bound)
            except ClassifierUnavailable as exc:
                log.warning("forward-axis check skipped for %s: %s", entry.asset_id, exc)

        stage = "gates"
        record = AuditRecord(
            asset_id=entry.asset_id,
            category=entry.category,
            subcategory=entry.subcategory,
            measurement=measurement,
            interval=interval,
            sps=scores,
            health=flags,
            anchor=anchor,
            hull=hull_rep,
            hull_error=hull_err,
            text=stats,
            tokens=tuple(tokens),
            texture_count=probe.texture_count,
            texture_dims=tuple(tuple(d) for d in probe.texture_dims),
            forward_axis=fwd,
            gate_results={},
        )
        record.gate_results = curation_gates(record, config)
        return record, None
    except Exception as exc:  # per-asset isolation: any failure becomes an entry
        return None, AssetFailure(
            asset_id=entry.asset_id,
            stage=stage,
            error_type=type(exc).__name__,
            message=str(exc),
        )


# --- aggregation ------------------------------------------------------------

def _pooled_overall(records, config: AuditConfig) -> dict | None:
    """Overall scale row pooled over every scored record (not a column mean)."""
    xs = [r.measurement.x for r in records if r.sps is not None]
    if not xs:
        return None
    arr = np.array(xs)
    scores = np.array([r.sps[config.decay] for r in records if r.sps is not None])
    plaus = np.array([
        r.interval.lower <= r.measurement.x <= r.interval.upper
        for r in records if r.sps is not None
    ])
    return {
        "category": "Overall",
        "n": int(arr.size),
        "mean": float(arr.mean()),
        "std": float(arr.std()),
        "cv": float(arr.std() / arr.mean()),
        "median": float(np.median(arr)),
        "min": float(arr.min()),
        "max": float(arr.max()),
        "trimmed_mean": trimmed_mean(arr, config.trim),
        "pct_plausible": float(plaus.mean() * 100.0),
        "mean_sps": float(scores.mean()),
        "pct_perfect": float((scores == 1.0).mean() * 100.0),
    }


def _aggregate(records, failures, config: AuditConfig, intervals: dict):
    scored = [r for r in records if r.sps is not None]

    per_category = {}
    measurements_by_cat = {}
    for r in scored:
        measurements_by_cat.setdefault(r.category, []).append(r.measurement)
    for cat in sorted(measurements_by_cat):
        per_category[cat] = category_stats(
            cat, measurements_by_cat[cat], intervals[cat],
            kind=config.decay, trim=config.trim,
        )

    sensitivity = None
    if len(measurements_by_cat) >= 2:
        mean_triples = {
            cat: tuple(
                category_stats(cat, ms, intervals[cat], kind=kind, trim=config.trim).mean_sps
                for kind in DECAY_KINDS
            )
            for cat, ms in measurements_by_cat.items()
        }
        sensitivity = sensitivity_report(mean_triples)

    coherence = {}
    table = None
    if config.embeddings_path:
        table = load_embeddings(config.embeddings_path)
        for pair in COHERENCE_PAIRS:
            try:
                coherence[pair] = coherence_stats(table, pair)
            except NoOverlap:
                continue

    n = len(records)
    pct = lambda flag_values: float(np.mean(flag_values) * 100.0) if n else 0.0

    eps = np.array([r.anchor.epsilon_anchor for r in records]) if n else np.array([0.0])
    hulls = [r.hull for r in records if r.hull is not None]
    all_tex = [max(w, h) for r in records for (w, h) in r.texture_dims]

    def _mean(vals):
        vals = list(vals)
        return float(np.mean(vals)) if vals else None

    cvs = [stats.cv for stats in per_category.values()]
    mean_sps_val = _mean(r.sps[config.decay] for r in scored)
    plaus = [
        100.0 * (r.interval.lower <= r.measurement.x <= r.interval.upper) for r in scored
    ]
    vocab = set()
    for r in records:
        vocab.update(r.tokens)

    text3d = coherence.get("text_3d")
    dash = Dashboard(
        n_assets=n,
        n_failures=len(failures),
        mean_sps=mean_sps_val,
        mean_cv=_mean(cvs),
        pct_plausible=_mean(plaus),
        pct_watertight=pct([r.health.watertight for r in records]),
        pct_manifold=pct([r.health.manifold for r in records]),
        pct_winding_consistent=pct([r.health.winding_consistent for r in records]),
        mean_degenerate_fraction=_mean(r.health.degenerate_fraction for r in records) or 0.0,
        mean_face_count=_mean(r.health.face_count for r in records) or 0.0,
        pct_has_uv=pct([r.health.has_uv for r in records]),
        mean_texture_size=_mean(all_tex),
        mean_anchor_error=float(eps.mean()) if n else 0.0,
        median_anchor_error=float(np.median(eps)) if n else 0.0,
        pct_anchor_out_of_box=pct([r.anchor.out_of_box for r in records]),
        pct_anchor_under_1cm=pct([r.anchor.under_1cm for r in records]),
        hull_mean_triangles=_mean(h.hull_triangles for h in hulls),
        hull_p95_triangles=(
            float(np.percentile([h.hull_triangles for h in hulls], 95)) if hulls else None
        ),
        hull_median_coverage=(
            float(np.median([h.volume_coverage for h in hulls])) if hulls else None
        ),
        hull_mean_containment=(
            float(np.mean([h.vertex_containment for h in hulls]) * 100.0) if hulls else None
        ),
        mean_description_tokens=_mean(r.text.meaningful_tokens for r in records) or 0.0,
        vocab_size=len(vocab),
        mean_concept_density=_mean(r.text.concept_density for r in records) or 0.0,
        coherence_text_3d_mean=text3d.mean if text3d else None,
        coherence_text_3d_std=text3d.std if text3d else None,
        gate_pass_rate=pct([record_passes(r) for r in records]),
    )
    return dash, per_category, sensitivity, coherence


def run_audit(manifest_path, intervals: dict, config: AuditConfig) -> AuditResult:
    """Audit every manifest entry and fold the records into a dashboard.

    Asset paths resolve against config.assets_dir (manifest directory when
    unset). Raises MissingInterval up front unless allow_missing_intervals;
    raises EmptyDataset for an empty manifest. Individual asset problems
    become AssetFailure entries, never exceptions.
    """
    manifest_path = Path(manifest_path)
    entries = load_manifest(manifest_path)
    if not entries:
        raise EmptyDataset(f"manifest {manifest_path} has no entries")
    base_dir = Path(config.assets_dir) if config.assets_dir else manifest_path.parent

    if not config.allow_missing_intervals:
        for cat in sorted({e.category for e in entries}):
            if cat not in intervals:
                raise MissingInterval(cat)

    def work(entry):
        return _audit_one(entry, intervals.get(entry.category), config, base_dir)

    if config.jobs > 1:
        with ThreadPoolExecutor(max_workers=config.jobs) as pool:
            outcomes = list(pool.map(work, entries))
    else:
        outcomes = [work(e) for e in entries]

    records = [r for r, _ in outcomes if r is not None]
    failures = [f for _, f in outcomes if f is not None]
    used = {r.category for r in records if r.sps is not None}
    dash, per_category, sensitivity, coherence = _aggregate(
        records, failures, config, {c: intervals[c] for c in used}
    )
    return AuditResult(
        records=records,
        failures=failures,
        dashboard=dash,
        per_category=per_category,
        sensitivity=sensitivity,
        coherence=coherence,
        config=config,
        fingerprints=fingerprints(intervals, config),
        generated_at=config.epoch if config.epoch is not None else int(time.time()),
    )


# --- serialization ----------------------------------------------------------

def _json_safe(value):
    """Replace non-finite floats with None so strict JSON dumping succeeds."""
    if isinstance(value, float) and not np.isfinite(value):
        return None
    if isinstance(value, dict):
        return {k: _json_safe(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_json_safe(v) for v in value]
    return value


def _record_dict(r: AuditRecord) -> dict:
    return {
        "asset_id": r.asset_id,
        "category": r.category,
        "subcategory": r.subcategory,
        "measurement": (
            {"x": r.measurement.x, "axis": r.measurement.axis} if r.measurement else None
        ),
        "interval": (
            {
                "lower_m": r.interval.lower,
                "upper_m": r.interval.upper,
                "provenance": r.interval.provenance,
            }
            if r.interval
            else None
        ),
        "sps": dict(r.sps) if r.sps else None,
        "health": {
            "watertight": r.health.watertight,
            "manifold": r.health.manifold,
            "winding_consistent": r.health.winding_consistent,
            "degenerate_fraction": r.health.degenerate_fraction,
            "face_count": r.health.face_count,
            "has_uv": r.health.has_uv,
        },
        "anchor": {
            "epsilon_anchor": r.anchor.epsilon_anchor,
            "expected_anchor": list(r.anchor.expected_anchor),
            "mode": r.anchor.mode,
            "anchor_type": r.anchor.anchor_type,
            "capped": r.anchor.capped,
            "out_of_box": r.anchor.out_of_box,
            "under_1cm": r.anchor.under_1cm,
            "centroid_fallback": r.anchor.centroid_fallback,
        },
        "hull": (
            {
                "hull_triangles": r.hull.hull_triangles,
                "vertex_containment": r.hull.vertex_containment,
                "volume_coverage": r.hull.volume_coverage,
            }
            if r.hull
            else None
        ),
        "hull_error": r.hull_error,
        "text": {
            "meaningful_tokens": r.text.meaningful_tokens,
            "concept_density": r.text.concept_density,
            "tokens": list(r.tokens),
        },
        "textures": {"count": r.texture_count, "dims": [list(d) for d in r.texture_dims]},
        "forward_axis": (
            {
                "status": r.forward_axis.status,
                "rotation_deg": r.forward_axis.rotation_deg,
                "queries": r.forward_axis.queries,
            }
            if r.forward_axis
            else None
        ),
        "gates": dict(r.gate_results),
    }


def _category_row(stats: CategoryScaleStats) -> dict:
    return {
        "category": stats.category,
        "n": stats.n,
        "mean": stats.mean,
        "std": stats.std,
        "cv": stats.cv,
        "median": stats.median,
        "min": stats.min,
        "max": stats.max,
        "trimmed_mean": stats.trimmed_mean,
        "pct_plausible": stats.pct_plausible * 100.0,
        "mean_sps": stats.mean_sps,
        "pct_perfect": stats.pct_perfect * 100.0,
    }


def result_to_dict(result: AuditResult) -> dict:
    """The structured report document (pure function of the result)."""
    dash = result.dashboard
    doc = {
        "tool": {"name": "bankaudit", "version": __version__},
        "generated_at": result.generated_at,
        "config": {
            **result.config.flags_dict(),
            "jobs": result.config.jobs,
            "kernel_impl": kernels.IMPL,
            "sigma": "population",
            "scale_aggregation": "pooled",
            "median_even_rank": "lower_middle",
        },
        "fingerprints": dict(result.fingerprints),
        "dashboard": {
            "n_assets": dash.n_assets,
            "n_failures": dash.n_failures,
            "mean_sps": dash.mean_sps,
            "mean_cv": dash.mean_cv,
            "pct_plausible": dash.pct_plausible,
            "pct_watertight": dash.pct_watertight,
            "pct_manifold": dash.pct_manifold,
            "pct_winding_consistent": dash.pct_winding_consistent,
            "mean_degenerate_fraction": dash.mean_degenerate_fraction,
            "mean_face_count": dash.mean_face_count,
            "pct_has_uv": dash.pct_has_uv,
            "mean_texture_size": dash.mean_texture_size,
            "mean_anchor_error": dash.mean_anchor_error,
            "median_anchor_error": dash.median_anchor_error,
            "pct_anchor_out_of_box": dash.pct_anchor_out_of_box,
            "pct_anchor_under_1cm": dash.pct_anchor_under_1cm,
            "hull_mean_triangles": dash.hull_mean_triangles,
            "hull_p95_triangles": dash.hull_p95_triangles,
            "hull_median_coverage": dash.hull_median_coverage,
            "hull_mean_containment": dash.hull_mean_containment,
            "mean_description_tokens": dash.mean_description_tokens,
            "vocab_size": dash.vocab_size,
            "mean_concept_density": dash.mean_concept_density,
            "coherence_text_3d_mean": dash.coherence_text_3d_mean,
            "coherence_text_3d_std": dash.coherence_text_3d_std,
            "gate_pass_rate": dash.gate_pass_rate,
        },
        "per_category": [
            _category_row(result.per_category[c]) for c in sorted(result.per_category)
        ],
        "overall": _pooled_overall(result.records, result.config),
        "sensitivity": None,
        "coherence": {
            pair: {
                "n": cs.n,
                "mean": cs.mean,
                "std": cs.std,
                "bin_width": cs.bin_width,
            }
            for pair, cs in sorted(result.coherence.items())
        },
        "records": [_record_dict(r) for r in result.records],
        "failures": [
            {
                "asset_id": f.asset_id,
                "stage": f.stage,
                "error_type": f.error_type,
                "message": f.message,
            }
            for f in result.failures
        ],
    }
    if result.sensitivity is not None:
        s = result.sensitivity
        doc["sensitivity"] = {
            "categories": list(s.categories),
            "per_category_means": {k: list(v) for k, v in s.per_category_means.items()},
            "ranks": {k: list(v) for k, v in s.ranks.items()},
            "kendall_tau": dict(s.kendall_tau),
        }
    return _json_safe(doc)


def dump_structured(doc: dict) -> str:
    return json.dumps(doc, sort_keys=True, indent=2, allow_nan=False) + "\n"


_TAB_COLUMNS = ("category", "n", "median", "mean", "min", "max", "std", "cv",
                "trimmed_mean", "pct_plausible", "mean_sps", "pct_perfect")


def render_tabular(doc: dict) -> str:
    """Per-category TSV (the published tables' column set) plus a pooled
    Overall row."""
    lines = ["\t".join(_TAB_COLUMNS)]
    rows = list(doc["per_category"])
    if doc.get("overall"):
        rows.append(doc["overall"])
    for row in rows:
        cells = []
        for col in _TAB_COLUMNS:
            v = row[col]
            if isinstance(v, float):
                cells.append(f"{v!r}")
            else:
                cells.append(str(v))
        lines.append("\t".join(cells))
    return "\n".join(lines) + "\n"


def _fmt(v, spec=".4f", none="n/a"):
    return none if v is None else format(v, spec)


def render_prose(doc: dict) -> str:
    dash = doc["dashboard"]
    cfg = doc["config"]
    lines = [
        "bank audit summary",
        "==================",
        f"assets audited: {dash['n_assets']} ({dash['n_failures']} failures)",
        f"decay: {cfg['decay']}  trim: {cfg['trim']}  axis: {cfg['axis']}  "
        f"anchor mode: {cfg['anchor_mode']}  kernels: {cfg['kernel_impl']}",
        "",
        f"scale   mean SPS {_fmt(dash['mean_sps'])}  mean CV {_fmt(dash['mean_cv'])}  "
        f"plausible {_fmt(dash['pct_plausible'], '.1f')}%",
        f"health  watertight {dash['pct_watertight']:.1f}%  manifold {dash['pct_manifold']:.1f}%  "
        f"mean faces {dash['mean_face_count']:.1f}  UV {dash['pct_has_uv']:.1f}%  "
        f"mean texture {_fmt(dash['mean_texture_size'], '.1f')}",
        f"anchor  mean {dash['mean_anchor_error']:.4f} m  median {dash['median_anchor_error']:.4f} m  "
        f"outside box {dash['pct_anchor_out_of_box']:.1f}%  under 1 cm {dash['pct_anchor_under_1cm']:.1f}%",
        f"hull    mean tris {_fmt(dash['hull_mean_triangles'], '.1f')}  "
        f"p95 tris {_fmt(dash['hull_p95_triangles'], '.1f')}  "
        f"median coverage {_fmt(dash['hull_median_coverage'], '.3f')}  "
        f"containment {_fmt(dash['hull_mean_containment'], '.2f')}%",
        f"text    mean meaningful tokens {dash['mean_description_tokens']:.1f}  "
        f"vocab {dash['vocab_size']}  mean concept density {dash['mean_concept_density']:.2f}",
    ]
    if dash["coherence_text_3d_mean"] is not None:
        lines.append(
            f"embed   text-to-3d coherence {dash['coherence_text_3d_mean']:.3f} "
            f"± {dash['coherence_text_3d_std']:.3f}"
        )
    lines += [
        f"gates   pass rate {dash['gate_pass_rate']:.1f}%",
        "",
        f"config fingerprint: {doc['fingerprints']['config']}",
    ]
    return "\n".join(lines) + "\n"


def _hist_lines(edges, values, prefix=None):
    counts, _ = np.histogram(np.clip(values, edges[0], edges[-1]), bins=edges)
    out = []
    for i, c in enumerate(counts):
        row = [f"{edges[i]!r}", f"{edges[i + 1]!r}", str(int(c))]
        if prefix is not None:
            row.insert(0, prefix)
        out.append("\t".join(row))
    return out


def emit_report(result: AuditResult, out_dir, formats=("structured", "tabular", "prose")) -> list:
    """Write report files into out_dir; returns the paths written.

    structured -> audit.json, tabular -> categories.tsv, prose ->
    summary.txt. Histogram data files (heights, face counts, coherence)
    are always written for external plotting.
    """
    out_dir = Path(out_dir)
    doc = result_to_dict(result)
    written = []

    def _write(name, content):
        path = out_dir / name
        try:
            path.write_text(content, encoding="utf-8")
        except OSError as exc:
            raise IoFailure(f"cannot write {path}: {exc}") from exc
        written.append(path)

    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise IoFailure(f"cannot create {out_dir}: {exc}") from exc

    if "structured" in formats:
        _write("audit.json", dump_structured(doc))
    if "tabular" in formats:
        _write("categories.tsv", render_tabular(doc))
    if "prose" in formats:
        _write("summary.txt", render_prose(doc))

    # histogram data for external plotting, fixed binning
    height_lines = ["category\tbin_lo\tbin_hi\tcount"]
    by_cat = {}
    for r in result.records:
        if r.measurement is not None:
            by_cat.setdefault(r.category, []).append(r.measurement.x)
    for cat in sorted(by_cat):
        height_lines += _hist_lines(HEIGHT_BIN_EDGES, by_cat[cat], prefix=cat)
    _write("hist_heights.tsv", "\n".join(height_lines) + "\n")

    face_lines = ["bin_lo\tbin_hi\tcount"]
    face_lines += _hist_lines(FACE_BIN_EDGES, [r.health.face_count for r in result.records])
    _write("hist_face_counts.tsv", "\n".join(face_lines) + "\n")

    if result.coherence:
        co_lines = ["pair\tbin_lo\tbin_hi\tcount"]
        for pair in sorted(result.coherence):
            cs = result.coherence[pair]
            edges = np.linspace(-1.0, 1.0, len(cs.hist_counts) + 1)
            for i, c in enumerate(cs.hist_counts):
                co_lines.append(f"{pair}\t{edges[i]!r}\t{edges[i + 1]!r}\t{c}")
        _write("hist_coherence.tsv", "\n".join(co_lines) + "\n")

    return written


# --- CLI --------------------------------------------------------------------

class HttpClassifier:
    """Forward-axis oracle behind AUDIT_CLASSIFIER_URL.

    POSTs {asset_id, rotation_k} and reads {front_facing: bool}; the remote
    service is expected to hold its own renders of the bank.
    """

    def __init__(self, url: str, timeout: float = 30.0):
        self.url = url
        self.timeout = timeout

    def __call__(self, asset_id: str, mesh, rotation_k: int) -> bool:
        import requests

        resp = requests.post(
            self.url,
            json={"asset_id": asset_id, "rotation_k": rotation_k},
            timeout=self.timeout,
        )
        resp.raise_for_status()
        return bool(resp.json()["front_facing"])


def _build_audit_config(args) -> AuditConfig:
    axis = {"z": "z_height", "max": "max_extent"}[args.axis]
    mode = {"declared": "declared", "nearest": "nearest_canonical"}[args.anchor_mode]
    band = tuple(int(v) for v in args.face_band.split(","))
    if len(band) != 2 or band[0] > band[1]:
        raise ValueError("--face-band expects LO,HI with LO <= HI")
    classifier = None
    url = os.environ.get("AUDIT_CLASSIFIER_URL")
    if url:
        classifier = HttpClassifier(url)
    return AuditConfig(
        decay=args.decay,
        trim=args.trim,
        axis=axis,
        anchor_mode=mode,
        anchor_cap=args.anchor_cap,
        robust_trim=args.robust_trim,
        degenerate_max=args.degenerate_max,
        face_band=band,
        require_watertight=not args.relax_watertight,
        allow_missing_intervals=args.allow_missing_intervals,
        compute_hulls=not args.no_hulls,
        jobs=args.jobs,
        epoch=args.epoch,
        assets_dir=args.assets,
        tokenizer=load_tokenizer(args.tokenizer_dir) if args.tokenizer_dir else None,
        stopwords=load_stopwords(args.stopwords) if args.stopwords else None,
        banks=load_banks(args.banks) if args.banks else None,
        embeddings_path=args.embeddings,
        classifier=classifier,
    )


def _cmd_audit(args) -> int:
    config = _build_audit_config(args)
    intervals = load_intervals(args.intervals)
    result = run_audit(args.manifest, intervals, config)
    emit_report(result, args.out)
    for f in result.failures:
        print(f"FAILED {f.asset_id} [{f.stage}] {f.error_type}: {f.message}", file=sys.stderr)
    print(
        f"audited {result.dashboard.n_assets} assets "
        f"({result.dashboard.n_failures} failures) -> {args.out}"
    )
    return 2 if result.failures else 0


def _cmd_report(args) -> int:
    audit_path = Path(args.audit) / "audit.json"
    try:
        doc = json.loads(audit_path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise IoFailure(f"cannot read {audit_path}: {exc}") from exc
    if args.format == "structured":
        sys.stdout.write(dump_structured(doc))
    elif args.format == "tabular":
        sys.stdout.write(render_tabular(doc))
    else:
        sys.stdout.write(render_prose(doc))
    return 0


def _cmd_intervals_derive(args) -> int:
    with open(args.categories, encoding="utf-8") as fh:
        categories = [line.strip() for line in fh if line.strip()]
    if not categories:
        raise EmptyDataset("categories file is empty")
    config = JudgeConfig(
        endpoint_url=args.provider_url,
        model_name=args.model,
        temperature=args.temperature,
        runs=args.runs,
        mode=args.mode,
    )
    out = []
    for cat in categories:
        iv = derive_interval(cat, config)
        print(f"{cat}: [{iv.lower}, {iv.upper}] m from {iv.run_estimates_cm} cm")
        out.append(iv)
    save_intervals(out, args.out)
    print(f"wrote {len(out)} intervals -> {args.out}")
    return 0


def _cmd_retrieval(args) -> int:
    gallery = load_embeddings(args.gallery)
    queries = load_embeddings(args.queries)
    targets = load_query_meta(args.qmeta)
    ks = tuple(int(k) for k in args.k.split(","))
    method = {"mean": "mean", "max": "max_sim"}[args.pool]
    result = retrieval(queries, gallery, targets, ks=ks, method=method)
    doc = {
        "gallery_size": result.gallery_size,
        "n_queries": len(result.ranks),
        "method": result.method,
        "median_rank": result.median_rank,
        "recall_at": {str(k): v for k, v in sorted(result.recall_at.items())},
    }
    print(json.dumps(doc, sort_keys=True, indent=2, allow_nan=False))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bankaudit",
                                     description="3D asset bank auditing toolkit")
    parser.add_argument("--version", action="version", version=f"bankaudit {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("audit", help="audit a bank end to end")
    p.add_argument("--assets", help="base directory for asset paths (default: manifest dir)")
    p.add_argument("--manifest", required=True)
    p.add_argument("--intervals", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--decay", choices=list(DECAY_KINDS), default="gaussian")
    p.add_argument("--trim", type=float, default=0.05)
    p.add_argument("--axis", choices=["z", "max"], default="z")
    p.add_argument("--anchor-mode", choices=["declared", "nearest"], default="declared")
    p.add_argument("--anchor-cap", type=float, default=100.0)
    p.add_argument("--robust-trim", type=float, default=1.0)
    p.add_argument("--degenerate-max", type=float, default=0.01)
    p.add_argument("--face-band", default="100,200000", metavar="LO,HI")
    p.add_argument("--relax-watertight", action="store_true",
                   help="geometric gate accepts manifold non-watertight meshes")
    p.add_argument("--allow-missing-intervals", action="store_true")
    p.add_argument("--no-hulls", action="store_true", help="skip convex hull fidelity checks")
    p.add_argument("--tokenizer-dir")
    p.add_argument("--banks")
    p.add_argument("--stopwords")
    p.add_argument("--embeddings", help="EMBT table for coherence statistics")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--epoch", type=int, default=None,
                   help="fix the report timestamp (for reproducible output)")
    p.set_defaults(func=_cmd_audit)

    p = sub.add_parser("report", help="re-render a finished audit")
    p.add_argument("--audit", required=True, help="directory containing audit.json")
    p.add_argument("--format", choices=["prose", "tabular", "structured"], required=True)
    p.set_defaults(func=_cmd_report)

    p_iv = sub.add_parser("intervals", help="interval file operations")
    iv_sub = p_iv.add_subparsers(dest="iv_command", required=True)
    p = iv_sub.add_parser("derive", help="judge size intervals for categories")
    p.add_argument("--categories", required=True, help="text file, one category per line")
    p.add_argument("--provider-url", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--runs", type=int, default=3)
    p.add_argument("--mode", choices=["text", "vision"], default="text")
    p.add_argument("--temperature", type=float, default=0.1)
    p.add_argument("--out", default="intervals.json")
    p.set_defaults(func=_cmd_intervals_derive)

    p = sub.add_parser("retrieval", help="run the retrieval benchmark")
    p.add_argument("--gallery", required=True)
    p.add_argument("--queries", required=True)
    p.add_argument("--qmeta", required=True)
    p.add_argument("--k", default="1,5,10,25")
    p.add_argument("--pool", choices=["mean", "max"], default="mean")
    p.set_defaults(func=_cmd_retrieval)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=os.environ.get("BANKAUDIT_LOGLEVEL", "WARNING"))
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except BankAuditError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    except (OSError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
