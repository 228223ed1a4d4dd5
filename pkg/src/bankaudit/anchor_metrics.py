"""Anchor placement and orientation checks.

An asset's local origin should sit at its declared anchor (bottom-center,
top-center, or object center). The anchor error is the distance from the
origin to that canonical point, optionally capped so one unanchored asset
cannot drown the dashboard mean.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ClassifierUnavailable, NotWatertight
from .geometry import Aabb, HealthFlags, bbox, vertex_centroid, volumetric_centroid
from .ingest import MeshGeometry

ANCHOR_MODES = ("declared", "nearest_canonical")


@dataclass(frozen=True)
class AnchorReport:
    asset_id: str
    epsilon_anchor: float  # capped error, meters
    expected_anchor: tuple  # canonical point the error was measured against
    mode: str
    anchor_type: str  # anchor the error used (resolved type under nearest mode)
    capped: bool
    out_of_box: bool  # origin strictly outside the robust bbox on some axis
    under_1cm: bool
    centroid_fallback: bool  # center anchor fell back to the vertex centroid


@dataclass(frozen=True)
class ForwardAxisResult:
    asset_id: str
    status: str  # accepted | rotated | flagged
    rotation_deg: int  # 0 / 90 / 180 / 270 about +Z
    queries: int  # classifier calls made


def canonical_anchor(mesh: MeshGeometry, anchor_type: str,
                     flags: HealthFlags | None = None) -> tuple:
    """Canonical anchor point for a mesh, plus a centroid-fallback flag.

    bottom / top: bbox center in X/Y at the bbox Z extreme. center: the
    volumetric centroid, or the vertex centroid when the mesh is not
    watertight (fallback flagged in the result).
    """
    box = bbox(mesh)
    if anchor_type == "bottom":
        c = box.center
        return np.array([c[0], c[1], box.min[2]]), False
    if anchor_type == "top":
        c = box.center
        return np.array([c[0], c[1], box.max[2]]), False
    if anchor_type == "center":
        try:
            return volumetric_centroid(mesh, flags), False
        except NotWatertight:
            return vertex_centroid(mesh), True
    raise ValueError(f"unknown anchor type {anchor_type!r}")


def robust_bbox(mesh: MeshGeometry, trim_pct: float = 1.0) -> Aabb:
    """Percentile bounding box: per-axis [p, 100-p] with linear interpolation.

    trim_pct=0 reproduces the ordinary bbox over referenced vertices.
    """
    if not 0.0 <= trim_pct < 50.0:
        raise ValueError("trim_pct must be in [0, 50)")
    pts = mesh.referenced_positions()
    if trim_pct == 0.0:
        return bbox(mesh)
    lo = np.percentile(pts, trim_pct, axis=0)
    hi = np.percentile(pts, 100.0 - trim_pct, axis=0)
    return Aabb(min=lo, max=hi)


def anchor_error(
    asset_id: str,
    mesh: MeshGeometry,
    anchor_type: str,
    mode: str = "declared",
    cap: float = 100.0,
    robust_trim: float = 1.0,
    flags: HealthFlags | None = None,
) -> AnchorReport:
    """Distance from the mesh origin to its anchor point.

    declared mode measures against the manifest's anchor type; nearest mode
    measures against whichever canonical point is closest (ties broken
    bottom, top, center). The error is capped at `cap` meters.
    """
    if mode not in ANCHOR_MODES:
        raise ValueError(f"mode must be one of {ANCHOR_MODES}")
    origin = np.zeros(3)

    if mode == "declared":
        point, fallback = canonical_anchor(mesh, anchor_type, flags)
        used_type = anchor_type
    else:
        best = None
        for cand in ("bottom", "top", "center"):
            p, fb = canonical_anchor(mesh, cand, flags)
            d = float(np.linalg.norm(p - origin))
            if best is None or d < best[0]:
                best = (d, p, fb, cand)
        _, point, fallback, used_type = best

    raw = float(np.linalg.norm(point - origin))
    capped = raw > cap
    eps = min(raw, cap)

    rbox = robust_bbox(mesh, robust_trim)
    out = bool(np.any(origin < rbox.min) or np.any(origin > rbox.max))

    return AnchorReport(
        asset_id=asset_id,
        epsilon_anchor=eps,
        expected_anchor=tuple(float(v) for v in point),
        mode=mode,
        anchor_type=used_type,
        capped=capped,
        out_of_box=out,
        under_1cm=eps < 0.01,
        centroid_fallback=fallback,
    )


def _rotate_z(mesh: MeshGeometry, k: int) -> MeshGeometry:
    """Mesh rotated k * 90 degrees counter-clockwise about +Z."""
    k = k % 4
    if k == 0:
        return mesh
    c, s = [(1, 0), (0, 1), (-1, 0), (0, -1)][k]
    rot = np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])
    return MeshGeometry(
        positions=mesh.positions @ rot.T,
        triangles=mesh.triangles,
        uvs=mesh.uvs,
        has_uv=mesh.has_uv,
    )


def forward_axis_audit(asset_id: str, mesh: MeshGeometry, classifier) -> ForwardAxisResult:
    """Find the yaw (in quarter turns) at which the asset faces forward.

    `classifier(mesh, k)` answers whether the mesh rotated by k quarter
    turns is front-facing. k=0 accepted as-is; k in {1, 2, 3} reports the
    asset as rotated; no yes at all flags it. A missing or failing
    classifier raises ClassifierUnavailable.
    """
    if classifier is None:
        raise ClassifierUnavailable("no forward-axis classifier configured")
    queries = 0
    for k in range(4):
        rotated = _rotate_z(mesh, k)
        try:
            verdict = bool(classifier(rotated, k))
        except Exception as exc:
            raise ClassifierUnavailable(f"classifier failed on {asset_id}: {exc}") from exc
        queries += 1
        if verdict:
            status = "accepted" if k == 0 else "rotated"
            return ForwardAxisResult(asset_id=asset_id, status=status,
                                     rotation_deg=90 * k, queries=queries)
    return ForwardAxisResult(asset_id=asset_id, status="flagged",
                             rotation_deg=0, queries=queries)
