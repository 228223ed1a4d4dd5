"""Hot numeric loops behind the mesh audit, JIT-compiled with a numpy fallback.

Each kernel exists in two forms: a scalar-loop form that numba compiles and a
vectorized numpy form. At import time one set is bound to the public names
(``valence_summary``, ``signed_volume_sum``, ``volume_moments``,
``degenerate_count``, ``contained_count``):

* numba importable and ``BANKAUDIT_NO_NUMBA`` unset -> JIT path
* otherwise -> numpy path

``IMPL`` records which path is active and is echoed into audit reports.
The two forms compute the same formulas; summation order may differ, so
agreement is to float rounding (asserted at 1e-12 relative in the tests),
not bit-for-bit. ``numpy_impls()`` / ``numba_impls()`` expose both sets in
one process for the benchmark and the equivalence tests.
"""

from __future__ import annotations

import math
import os

import numpy as np

_DISABLED = os.environ.get("BANKAUDIT_NO_NUMBA", "") == "1"

try:
    import numba as _numba
except ImportError:
    _numba = None


# --- loop forms (numba-compilable) -----------------------------------------

def _valence_summary_loop(sorted_keys):
    """Count undirected edges whose multiplicity is !=2 / >2.

    ``sorted_keys`` is a sorted int64 array of encoded undirected edges.
    Returns (n_not_two, n_over_two).
    """
    n = sorted_keys.shape[0]
    not_two = 0
    over_two = 0
    i = 0
    while i < n:
        j = i + 1
        while j < n and sorted_keys[j] == sorted_keys[i]:
            j += 1
        c = j - i
        if c != 2:
            not_two += 1
        if c > 2:
            over_two += 1
        i = j
    return not_two, over_two


def _signed_volume_sum_loop(positions, triangles):
    """Sum of signed tetrahedron volumes of each triangle against the origin."""
    total = 0.0
    for t in range(triangles.shape[0]):
        i0 = triangles[t, 0]
        i1 = triangles[t, 1]
        i2 = triangles[t, 2]
        ax = positions[i0, 0]
        ay = positions[i0, 1]
        az = positions[i0, 2]
        bx = positions[i1, 0]
        by = positions[i1, 1]
        bz = positions[i1, 2]
        cx = positions[i2, 0]
        cy = positions[i2, 1]
        cz = positions[i2, 2]
        total += (ax * (by * cz - bz * cy)
                  + ay * (bz * cx - bx * cz)
                  + az * (bx * cy - by * cx))
    return total / 6.0


def _volume_moments_loop(positions, triangles):
    """Signed volume and volume-weighted first moments (for the centroid).

    Each triangle forms a tetrahedron with the origin; the tet centroid is
    (a+b+c)/4 since the fourth vertex is the origin. Returns
    (volume, mx, my, mz) with centroid = (mx, my, mz) / volume.
    """
    vol = 0.0
    mx = 0.0
    my = 0.0
    mz = 0.0
    for t in range(triangles.shape[0]):
        i0 = triangles[t, 0]
        i1 = triangles[t, 1]
        i2 = triangles[t, 2]
        ax = positions[i0, 0]
        ay = positions[i0, 1]
        az = positions[i0, 2]
        bx = positions[i1, 0]
        by = positions[i1, 1]
        bz = positions[i1, 2]
        cx = positions[i2, 0]
        cy = positions[i2, 1]
        cz = positions[i2, 2]
        v = (ax * (by * cz - bz * cy)
             + ay * (bz * cx - bx * cz)
             + az * (bx * cy - by * cx)) / 6.0
        vol += v
        mx += v * (ax + bx + cx) * 0.25
        my += v * (ay + by + cy) * 0.25
        mz += v * (az + bz + cz) * 0.25
    return vol, mx, my, mz


def _degenerate_count_loop(positions, triangles, eps_area):
    """Triangles with a repeated vertex index or area below ``eps_area``."""
    count = 0
    for t in range(triangles.shape[0]):
        i0 = triangles[t, 0]
        i1 = triangles[t, 1]
        i2 = triangles[t, 2]
        if i0 == i1 or i1 == i2 or i0 == i2:
            count += 1
            continue
        ux = positions[i1, 0] - positions[i0, 0]
        uy = positions[i1, 1] - positions[i0, 1]
        uz = positions[i1, 2] - positions[i0, 2]
        vx = positions[i2, 0] - positions[i0, 0]
        vy = positions[i2, 1] - positions[i0, 1]
        vz = positions[i2, 2] - positions[i0, 2]
        nx = uy * vz - uz * vy
        ny = uz * vx - ux * vz
        nz = ux * vy - uy * vx
        area = 0.5 * math.sqrt(nx * nx + ny * ny + nz * nz)
        if area < eps_area:
            count += 1
    return count


def _contained_count_loop(points, normals, offsets, eps):
    """Points within ``eps`` of the inside of every half-space n.p <= offset."""
    count = 0
    for i in range(points.shape[0]):
        inside = True
        for f in range(normals.shape[0]):
            d = (normals[f, 0] * points[i, 0]
                 + normals[f, 1] * points[i, 1]
                 + normals[f, 2] * points[i, 2]) - offsets[f]
            if d > eps:
                inside = False
                break
        if inside:
            count += 1
    return count


# --- numpy forms ------------------------------------------------------------

def _valence_summary_np(sorted_keys):
    if sorted_keys.shape[0] == 0:
        return 0, 0
    _, counts = np.unique(sorted_keys, return_counts=True)
    return int(np.count_nonzero(counts != 2)), int(np.count_nonzero(counts > 2))


def _signed_volume_sum_np(positions, triangles):
    if triangles.shape[0] == 0:
        return 0.0
    a = positions[triangles[:, 0]]
    b = positions[triangles[:, 1]]
    c = positions[triangles[:, 2]]
    return float(np.einsum("ij,ij->i", a, np.cross(b, c)).sum() / 6.0)


def _volume_moments_np(positions, triangles):
    if triangles.shape[0] == 0:
        return 0.0, 0.0, 0.0, 0.0
    a = positions[triangles[:, 0]]
    b = positions[triangles[:, 1]]
    c = positions[triangles[:, 2]]
    v = np.einsum("ij,ij->i", a, np.cross(b, c)) / 6.0
    m = (v[:, None] * (a + b + c) * 0.25).sum(axis=0)
    return float(v.sum()), float(m[0]), float(m[1]), float(m[2])


def _degenerate_count_np(positions, triangles, eps_area):
    if triangles.shape[0] == 0:
        return 0
    i0, i1, i2 = triangles[:, 0], triangles[:, 1], triangles[:, 2]
    repeated = (i0 == i1) | (i1 == i2) | (i0 == i2)
    u = positions[i1] - positions[i0]
    v = positions[i2] - positions[i0]
    area = 0.5 * np.linalg.norm(np.cross(u, v), axis=1)
    return int(np.count_nonzero(repeated | (area < eps_area)))


def _contained_count_np(points, normals, offsets, eps):
    if points.shape[0] == 0:
        return 0
    if normals.shape[0] == 0:
        return int(points.shape[0])
    dist = points @ normals.T - offsets
    return int(np.count_nonzero((dist <= eps).all(axis=1)))


_LOOP_IMPLS = {
    "valence_summary": _valence_summary_loop,
    "signed_volume_sum": _signed_volume_sum_loop,
    "volume_moments": _volume_moments_loop,
    "degenerate_count": _degenerate_count_loop,
    "contained_count": _contained_count_loop,
}

_NUMPY_IMPLS = {
    "valence_summary": _valence_summary_np,
    "signed_volume_sum": _signed_volume_sum_np,
    "volume_moments": _volume_moments_np,
    "degenerate_count": _degenerate_count_np,
    "contained_count": _contained_count_np,
}

_numba_cache: dict | None = None


def numpy_impls() -> dict:
    """The vectorized numpy kernel set (always available)."""
    return dict(_NUMPY_IMPLS)


def numba_impls() -> dict | None:
    """The JIT-compiled kernel set, or None when numba is not importable.

    Compilation happens on first call and is cached (numba's on-disk cache
    makes later processes cheap too).
    """
    global _numba_cache
    if _numba is None:
        return None
    if _numba_cache is None:
        jit = _numba.njit(cache=True)
        _numba_cache = {name: jit(fn) for name, fn in _LOOP_IMPLS.items()}
    return _numba_cache


if _numba is not None and not _DISABLED:
    _active = numba_impls()
    IMPL = "numba"
else:
    _active = _NUMPY_IMPLS
    IMPL = "numpy"

valence_summary = _active["valence_summary"]
signed_volume_sum = _active["signed_volume_sum"]
volume_moments = _active["volume_moments"]
degenerate_count = _active["degenerate_count"]
contained_count = _active["contained_count"]
