"""Scale plausibility scoring and its aggregate statistics.

The core scalar is a soft plausibility score: distance from a measured size
to the category's interval, normalized by the interval half-width, pushed
through a decay curve. Inside the interval the score is exactly 1.0 for
every decay kind.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import EmptyCategory, LengthMismatch
from .intervals import PlausibleInterval

DECAY_KINDS = ("gaussian", "linear", "lorentzian")

MEASUREMENT_AXES = ("z_height", "max_extent")


@dataclass(frozen=True)
class AssetMeasurement:
    asset_id: str
    x: float  # measured size in meters, > 0
    axis: str = "z_height"

    def __post_init__(self):
        if self.axis not in MEASUREMENT_AXES:
            raise ValueError(f"axis must be one of {MEASUREMENT_AXES}")
        if not self.x > 0:
            raise ValueError(f"measured size must be positive, got {self.x}")


def boundary_distance(x: float, lower: float, upper: float) -> float:
    """Distance from x to [lower, upper]: 0 inside, linear outside."""
    if x < lower:
        return lower - x
    if x > upper:
        return x - upper
    return 0.0


def sps(x: float, interval: PlausibleInterval, kind: str = "gaussian") -> float:
    """Soft plausibility score in (0, 1]; exactly 1.0 inside the interval.

    d is the boundary distance, h the interval half-width:
      gaussian    exp(-(d/h)^2)
      linear      max(0, 1 - d/h)
      lorentzian  1 / (1 + (d/h)^2)
    """
    if kind not in DECAY_KINDS:
        raise ValueError(f"unknown decay kind {kind!r}")
    d = boundary_distance(x, interval.lower, interval.upper)
    if d == 0.0:
        return 1.0
    t = d / interval.half_width
    if kind == "gaussian":
        return math.exp(-t * t)
    if kind == "linear":
        return max(0.0, 1.0 - t)
    return 1.0 / (1.0 + t * t)


def scale_gate(x: float, interval: PlausibleInterval) -> bool:
    """Hard pass/fail: within a factor of 3 of the interval on either side."""
    return interval.lower / 3.0 <= x <= 3.0 * interval.upper


@dataclass(frozen=True)
class CategoryScaleStats:
    category: str
    n: int
    mean: float
    std: float  # population std (ddof=0)
    cv: float
    median: float
    min: float
    max: float
    trimmed_mean: float
    pct_plausible: float  # fraction with boundary distance 0
    mean_sps: float
    pct_perfect: float  # fraction with sps exactly 1.0


def trimmed_mean(values: np.ndarray, trim: float) -> float:
    """Mean after dropping floor(trim * n) values from each sorted tail."""
    if not 0.0 <= trim < 0.5:
        raise ValueError("trim fraction must be in [0, 0.5)")
    v = np.sort(np.asarray(values, dtype=np.float64))
    k = int(math.floor(trim * len(v)))
    core = v[k:len(v) - k] if k else v
    return float(core.mean())


def category_stats(category: str, measurements, interval: PlausibleInterval,
                   kind: str = "gaussian", trim: float = 0.05) -> CategoryScaleStats:
    """Descriptive and plausibility statistics for one category's sizes."""
    xs = np.array([m.x for m in measurements], dtype=np.float64)
    if xs.size == 0:
        raise EmptyCategory(f"no measurements for category {category!r}")
    scores = np.array([sps(float(x), interval, kind) for x in xs])
    inside = np.array([
        boundary_distance(float(x), interval.lower, interval.upper) == 0.0 for x in xs
    ])
    perfect = scores == 1.0
    mean = float(xs.mean())
    std = float(xs.std())  # ddof=0
    return CategoryScaleStats(
        category=category,
        n=int(xs.size),
        mean=mean,
        std=std,
        cv=std / mean,
        median=float(np.median(xs)),
        min=float(xs.min()),
        max=float(xs.max()),
        trimmed_mean=trimmed_mean(xs, trim),
        pct_plausible=float(inside.mean()),
        mean_sps=float(scores.mean()),
        pct_perfect=float(perfect.mean()),
    )


def kendall_tau(a, b) -> float:
    """Kendall rank correlation with tie correction (tau-b).

    O(n^2) pair loop: pairs tied in a (or b) only feed the tie terms.
    Returns nan when either sequence is fully tied.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise LengthMismatch(a.shape[0] if a.ndim else 0, b.shape[0] if b.ndim else 0)
    n = len(a)
    if n < 2:
        raise ValueError("need at least 2 observations")
    concordant = discordant = 0
    n1 = n2 = 0  # tie pair counts in a and b
    for i in range(n - 1):
        for j in range(i + 1, n):
            da = a[i] - a[j]
            db = b[i] - b[j]
            if da == 0.0:
                n1 += 1
            if db == 0.0:
                n2 += 1
            if da == 0.0 or db == 0.0:
                continue
            if (da > 0) == (db > 0):
                concordant += 1
            else:
                discordant += 1
    n0 = n * (n - 1) // 2
    denom = math.sqrt(float(n0 - n1) * float(n0 - n2))
    if denom == 0.0:
        return float("nan")
    return (concordant - discordant) / denom


def rank_descending(values) -> np.ndarray:
    """1-based ranks, largest value first, ties averaged."""
    v = np.asarray(values, dtype=np.float64)
    order = np.lexsort((np.arange(len(v)), -v))
    ranks = np.empty(len(v), dtype=np.float64)
    i = 0
    while i < len(v):
        j = i
        while j + 1 < len(v) and v[order[j + 1]] == v[order[i]]:
            j += 1
        avg = (i + j) / 2.0 + 1.0
        ranks[order[i:j + 1]] = avg
        i = j + 1
    return ranks


@dataclass(frozen=True)
class SensitivityReport:
    """How decay choice affects category ordering by mean score."""

    categories: tuple  # sorted category names
    per_category_means: dict  # category -> (gaussian, linear, lorentzian) means
    ranks: dict  # kind -> tuple of ranks, aligned with categories
    kendall_tau: dict  # "gaussian_linear" etc. -> tau between rank vectors


def sensitivity_report(per_category_means: dict) -> SensitivityReport:
    """Rank categories by mean score under each decay and correlate the ranks.

    per_category_means maps category -> a (gaussian, linear, lorentzian)
    triple of mean scores. Needs at least two categories.
    """
    categories = tuple(sorted(per_category_means))
    if len(categories) < 2:
        raise EmptyCategory("sensitivity analysis needs at least two categories")
    means = {}
    for cat in categories:
        triple = tuple(float(v) for v in per_category_means[cat])
        if len(triple) != len(DECAY_KINDS):
            raise ValueError(
                f"category {cat!r}: expected {len(DECAY_KINDS)} means, got {len(triple)}"
            )
        means[cat] = triple
    columns = {
        kind: tuple(means[cat][i] for cat in categories)
        for i, kind in enumerate(DECAY_KINDS)
    }
    ranks = {kind: tuple(rank_descending(columns[kind])) for kind in DECAY_KINDS}
    taus = {}
    for i, ka in enumerate(DECAY_KINDS):
        for kb in DECAY_KINDS[i + 1:]:
            taus[f"{ka}_{kb}"] = kendall_tau(ranks[ka], ranks[kb])
    return SensitivityReport(
        categories=categories,
        per_category_means=means,
        ranks=ranks,
        kendall_tau=taus,
    )
