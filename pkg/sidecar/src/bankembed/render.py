"""Headless orthographic renderer for the four canonical audit views.

Pure-numpy z-buffer rasterization, deterministic by construction: a fixed
camera set (+X, -X, +Y, -Y looking at the bbox center), a fixed light, no
antialiasing, and depth ties broken by triangle order. Shading is flat
per-face wrap lighting (two-sided), which keeps every axis-aligned face
at a distinct gray level so views are distinguishable even for a plain
cube. Meant for embedding audits, not beauty shots.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import glbmin
from .errors import GlbReadError, RenderFailure

VIEW_NAMES = ("+X", "-X", "+Y", "-Y")

# screen-right, screen-up, and depth axes per view; depth grows toward the
# camera so the z-buffer keeps the largest value
_BASES = {
    "+X": ((0.0, 1.0, 0.0), (0.0, 0.0, 1.0), (1.0, 0.0, 0.0)),
    "-X": ((0.0, -1.0, 0.0), (0.0, 0.0, 1.0), (-1.0, 0.0, 0.0)),
    "+Y": ((-1.0, 0.0, 0.0), (0.0, 0.0, 1.0), (0.0, 1.0, 0.0)),
    "-Y": ((1.0, 0.0, 0.0), (0.0, 0.0, 1.0), (0.0, -1.0, 0.0)),
}

_RAW_LIGHT = np.array([0.40, 0.25, 0.88])
LIGHT_DIRECTION = _RAW_LIGHT / np.linalg.norm(_RAW_LIGHT)
AMBIENT = 0.22
DIFFUSE = 0.70


@dataclass(frozen=True)
class RenderSpec:
    """Four fixed orthographic cameras looking at the bbox center, frame
    sized to the bbox plus a margin."""

    image_size: int = 224
    background: float = 0.5
    margin: float = 0.10
    views: tuple = VIEW_NAMES

    def __post_init__(self):
        if tuple(self.views) != VIEW_NAMES:
            raise ValueError(f"the view set is fixed to {VIEW_NAMES}")
        if self.image_size < 8:
            raise ValueError(f"image_size {self.image_size} is too small to rasterize")
        if not 0.0 <= self.background <= 1.0:
            raise ValueError("background must be a gray level in [0, 1]")


def render_views(glb_path, spec: RenderSpec = RenderSpec(), asset_id: str | None = None) -> list:
    """Render the four canonical views of a GLB file.

    Returns a list of four (size, size, 3) uint8 images in VIEW_NAMES
    order. Unreadable files and empty scenes raise RenderFailure tagged
    with asset_id (or the path when no id is given).
    """
    name = asset_id if asset_id is not None else str(glb_path)
    try:
        positions, triangles = glbmin.load_mesh(glb_path)
    except GlbReadError as exc:
        raise RenderFailure(name, str(exc)) from exc
    return render_mesh_views(positions, triangles, spec, name=name)


def render_mesh_views(positions, triangles, spec: RenderSpec = RenderSpec(), name: str = "mesh") -> list:
    positions = np.asarray(positions, dtype=np.float64)
    triangles = np.asarray(triangles, dtype=np.int64).reshape(-1, 3)
    if triangles.size == 0:
        raise RenderFailure(name, "empty scene: no triangles to render")
    referenced = positions[np.unique(triangles)]
    lo = referenced.min(axis=0)
    hi = referenced.max(axis=0)
    center = (lo + hi) / 2.0

    images = []
    for view in spec.views:
        right, up, _ = (np.asarray(v) for v in _BASES[view])
        extent_r = float((hi - lo) @ np.abs(right))
        extent_u = float((hi - lo) @ np.abs(up))
        half = max(extent_r, extent_u) / 2.0 * (1.0 + spec.margin)
        half = max(half, 1e-9)
        images.append(_rasterize(positions, triangles, view, center, half, spec))
    return images


def _rasterize(positions, triangles, view, center, half, spec) -> np.ndarray:
    right, up, depth_axis = (np.asarray(v) for v in _BASES[view])
    size = spec.image_size
    rel = positions - center
    # pixel coordinates: x right, y down, origin at the top-left corner
    scale = size / (2.0 * half)
    px = (rel @ right) * scale + size / 2.0
    py = size / 2.0 - (rel @ up) * scale
    pz = rel @ depth_axis

    img = np.full((size, size), spec.background, dtype=np.float64)
    zbuf = np.full((size, size), -np.inf)

    for a, b, c in triangles:
        x0, x1, x2 = px[a], px[b], px[c]
        y0, y1, y2 = py[a], py[b], py[c]
        area = (x1 - x0) * (y2 - y0) - (y1 - y0) * (x2 - x0)
        if area == 0.0 or not np.isfinite(area):
            continue
        xmin = max(int(np.floor(min(x0, x1, x2))), 0)
        xmax = min(int(np.ceil(max(x0, x1, x2))), size)
        ymin = max(int(np.floor(min(y0, y1, y2))), 0)
        ymax = min(int(np.ceil(max(y0, y1, y2))), size)
        if xmin >= xmax or ymin >= ymax:
            continue

        n = np.cross(positions[b] - positions[a], positions[c] - positions[a])
        norm = np.linalg.norm(n)
        if norm < 1e-30:
            continue
        shade = AMBIENT + DIFFUSE * ((n / norm) @ LIGHT_DIRECTION + 1.0) / 2.0

        cx = np.arange(xmin, xmax) + 0.5
        cy = (np.arange(ymin, ymax) + 0.5)[:, None]
        w0 = ((x2 - x1) * (cy - y1) - (y2 - y1) * (cx - x1)) / area
        w1 = ((x0 - x2) * (cy - y2) - (y0 - y2) * (cx - x2)) / area
        w2 = 1.0 - w0 - w1
        depth = w0 * pz[a] + w1 * pz[b] + w2 * pz[c]
        region = (slice(ymin, ymax), slice(xmin, xmax))
        mask = (w0 >= 0.0) & (w1 >= 0.0) & (w2 >= 0.0) & (depth > zbuf[region])
        zbuf[region][mask] = depth[mask]
        img[region][mask] = shade

    gray = np.clip(np.rint(img * 255.0), 0, 255).astype(np.uint8)
    return np.repeat(gray[:, :, None], 3, axis=2)
