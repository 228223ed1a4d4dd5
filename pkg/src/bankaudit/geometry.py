"""Mesh health, volumes, and convex hulls.

Edge-valence bookkeeping, signed-tet volumes, and containment tests run
through the kernels module so they share the numba/numpy dispatch. The
convex hull is an incremental quickhull with conflict lists; hulls are
returned as ordinary MeshGeometry so downstream code treats them like any
other mesh.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import DegenerateInput, EmptyMesh, NonConvexHull, NotWatertight
from .ingest import MeshGeometry

EPS_AREA = 1e-12  # squared-meter threshold below which a triangle is degenerate


@dataclass(frozen=True)
class Aabb:
    """Axis-aligned bounding box, min/max corners in meters."""

    min: np.ndarray
    max: np.ndarray

    @property
    def extents(self) -> np.ndarray:
        return self.max - self.min

    @property
    def diagonal(self) -> float:
        return float(np.linalg.norm(self.extents))

    @property
    def volume(self) -> float:
        return float(np.prod(self.extents))

    @property
    def center(self) -> np.ndarray:
        return (self.min + self.max) * 0.5


@dataclass(frozen=True)
class HealthFlags:
    watertight: bool
    manifold: bool
    winding_consistent: bool
    degenerate_fraction: float
    face_count: int
    has_uv: bool


@dataclass(frozen=True)
class HullReport:
    hull_triangles: int
    vertex_containment: float  # fraction of mesh vertices inside the hull
    volume_coverage: float  # hull volume / mesh bbox volume


def bbox(mesh: MeshGeometry, referenced_only: bool = True) -> Aabb:
    """Bounding box over referenced vertices (all vertices if no triangles)."""
    pts = mesh.referenced_positions() if referenced_only else mesh.positions
    if len(pts) == 0:
        raise EmptyMesh("mesh has no vertices")
    return Aabb(min=pts.min(axis=0), max=pts.max(axis=0))


def _edge_keys(triangles: np.ndarray, n_vertices: int) -> tuple:
    """(undirected_keys, directed_keys) as int64, one per triangle edge."""
    v = np.int64(n_vertices)
    a = triangles[:, [0, 1, 2]].reshape(-1).astype(np.int64)
    b = triangles[:, [1, 2, 0]].reshape(-1).astype(np.int64)
    lo = np.minimum(a, b)
    hi = np.maximum(a, b)
    return lo * v + hi, a * v + b


def health(mesh: MeshGeometry) -> HealthFlags:
    """Watertightness, manifoldness, winding, and degeneracy in one pass.

    Watertight: at least one triangle and every undirected edge shared by
    exactly two triangles. Manifold: no undirected edge shared by more than
    two (vacuously true for a point set). Winding-consistent: no directed
    non-self edge appears twice. Degenerate triangles repeat an index or
    have area below EPS_AREA.
    """
    tris = mesh.triangles
    face_count = mesh.face_count
    if face_count == 0:
        return HealthFlags(watertight=False, manifold=True, winding_consistent=True,
                           degenerate_fraction=0.0, face_count=0, has_uv=mesh.has_uv)

    undirected, directed = _edge_keys(tris, len(mesh.positions))
    not_two, over_two = kernels.valence_summary(np.sort(undirected))

    # self-edges (from triangles that repeat an index) are already counted
    # degenerate; they don't decide winding
    a = directed // np.int64(len(mesh.positions))
    b = directed % np.int64(len(mesh.positions))
    non_self = directed[a != b]
    winding_ok = len(np.unique(non_self)) == len(non_self)

    n_degen = kernels.degenerate_count(mesh.positions, tris, EPS_AREA)
    return HealthFlags(
        watertight=bool(not_two == 0),
        manifold=bool(over_two == 0),
        winding_consistent=bool(winding_ok),
        degenerate_fraction=float(n_degen) / face_count,
        face_count=face_count,
        has_uv=mesh.has_uv,
    )


def mesh_volume(mesh: MeshGeometry, flags: HealthFlags | None = None) -> float:
    """Enclosed volume via signed tetrahedra against the origin.

    Only meaningful for watertight meshes; raises NotWatertight otherwise.
    """
    if flags is None:
        flags = health(mesh)
    if not flags.watertight:
        raise NotWatertight("volume of a non-watertight mesh is undefined")
    return abs(kernels.signed_volume_sum(mesh.positions, mesh.triangles))


def vertex_centroid(mesh: MeshGeometry) -> np.ndarray:
    pts = mesh.referenced_positions()
    if len(pts) == 0:
        raise EmptyMesh("mesh has no vertices")
    return pts.mean(axis=0)


def volumetric_centroid(mesh: MeshGeometry, flags: HealthFlags | None = None) -> np.ndarray:
    """Center of mass of the enclosed solid (uniform density).

    Signed-tet first moments; requires a watertight mesh.
    """
    if flags is None:
        flags = health(mesh)
    if not flags.watertight:
        raise NotWatertight("volumetric centroid needs a watertight mesh")
    vol, mx, my, mz = kernels.volume_moments(mesh.positions, mesh.triangles)
    if abs(vol) < 1e-300:
        raise DegenerateInput("mesh encloses no volume")
    return np.array([mx, my, mz]) / vol


# --- quickhull --------------------------------------------------------------

class _Face:
    __slots__ = ("verts", "normal", "offset", "conflicts", "alive")

    def __init__(self, verts, normal, offset):
        self.verts = verts  # (a, b, c) indices, counter-clockwise from outside
        self.normal = normal  # unit outward normal (zero vector if degenerate)
        self.offset = offset  # normal . x = offset on the plane
        self.conflicts = []  # point indices strictly outside this face
        self.alive = True

    def dist(self, p):
        return float(self.normal @ p - self.offset)


def _plane(points, a, b, c):
    """Unit normal and offset of the a-b-c plane (zeros when degenerate)."""
    n = np.cross(points[b] - points[a], points[c] - points[a])
    norm = np.linalg.norm(n)
    if norm < 1e-300:
        return np.zeros(3), 0.0
    n = n / norm
    return n, float(n @ points[a])


def _initial_tetra(points, eps):
    """Four affinely independent extreme points, or DegenerateInput."""
    # farthest pair along the axis of largest spread
    spread = points.max(axis=0) - points.min(axis=0)
    axis = int(np.argmax(spread))
    i0 = int(np.argmin(points[:, axis]))
    i1 = int(np.argmax(points[:, axis]))
    if np.linalg.norm(points[i1] - points[i0]) <= eps:
        raise DegenerateInput("all points coincide")
    # farthest from the line i0-i1
    d = points[i1] - points[i0]
    d = d / np.linalg.norm(d)
    rel = points - points[i0]
    perp = rel - np.outer(rel @ d, d)
    i2 = int(np.argmax(np.einsum("ij,ij->i", perp, perp)))
    if np.linalg.norm(perp[i2]) <= eps:
        raise DegenerateInput("points are collinear")
    # farthest from the plane i0-i1-i2
    n, off = _plane(points, i0, i1, i2)
    dist = points @ n - off
    i3 = int(np.argmax(np.abs(dist)))
    if abs(dist[i3]) <= eps:
        raise DegenerateInput("points are coplanar")
    return i0, i1, i2, i3


def convex_hull(mesh_or_points) -> MeshGeometry:
    """Convex hull of a mesh's referenced vertices (or a raw point array).

    Returns a watertight triangle mesh over a compacted copy of the hull
    vertices. Raises DegenerateInput when the points span fewer than three
    dimensions.
    """
    if isinstance(mesh_or_points, MeshGeometry):
        pts_in = mesh_or_points.referenced_positions()
    else:
        pts_in = np.asarray(mesh_or_points, dtype=np.float64)
    if pts_in.ndim != 2 or pts_in.shape[1] != 3:
        raise ValueError("points must have shape (n, 3)")
    points = np.unique(pts_in, axis=0)
    if len(points) < 4:
        raise DegenerateInput(f"need at least 4 distinct points, got {len(points)}")

    diag = float(np.linalg.norm(points.max(axis=0) - points.min(axis=0)))
    eps = max(1e-12, 1e-9 * diag)

    i0, i1, i2, i3 = _initial_tetra(points, eps)
    interior = points[[i0, i1, i2, i3]].mean(axis=0)

    def make_face(a, b, c, candidates, flip_ok=False):
        n, off = _plane(points, a, b, c)
        if flip_ok and n @ interior > off:
            a, b, c = a, c, b
            n, off = -n, -off
        face = _Face((a, b, c), n, off)
        if len(candidates):
            d = points[candidates] @ n - off
            face.conflicts = [int(p) for p in candidates[d > eps]]
        return face

    mask = np.ones(len(points), dtype=bool)
    mask[[i0, i1, i2, i3]] = False
    candidates = np.arange(len(points))[mask]
    faces = [
        make_face(i0, i1, i2, candidates, flip_ok=True),
        make_face(i0, i1, i3, candidates, flip_ok=True),
        make_face(i0, i2, i3, candidates, flip_ok=True),
        make_face(i1, i2, i3, candidates, flip_ok=True),
    ]

    # directed edge -> owning face, kept in lockstep with face.alive
    edge_owner = {}

    def register(face):
        a, b, c = face.verts
        edge_owner[(a, b)] = face
        edge_owner[(b, c)] = face
        edge_owner[(c, a)] = face

    for f in faces:
        register(f)

    pending = [f for f in faces if f.conflicts]
    while pending:
        face = pending.pop()
        if not face.alive or not face.conflicts:
            continue
        conf = np.array(face.conflicts)
        d = points[conf] @ face.normal - face.offset
        apex = int(conf[int(np.argmax(d))])

        # BFS over faces visible from the apex
        visible = []
        seen = {id(face)}
        stack = [face]
        while stack:
            f = stack.pop()
            visible.append(f)
            a, b, c = f.verts
            for ea, eb in ((a, b), (b, c), (c, a)):
                nb = edge_owner.get((eb, ea))
                if nb is None or not nb.alive or id(nb) in seen:
                    continue
                if nb.dist(points[apex]) > eps:
                    seen.add(id(nb))
                    stack.append(nb)

        # horizon: directed edges of visible faces whose twin is hidden
        horizon = []
        for f in visible:
            a, b, c = f.verts
            for ea, eb in ((a, b), (b, c), (c, a)):
                nb = edge_owner.get((eb, ea))
                if nb is not None and nb.alive and id(nb) not in seen:
                    horizon.append((ea, eb))

        orphan_set = set()
        for f in visible:
            f.alive = False
            orphan_set.update(f.conflicts)
            a, b, c = f.verts
            for key in ((a, b), (b, c), (c, a)):
                if edge_owner.get(key) is f:
                    del edge_owner[key]
        orphan_set.discard(apex)
        orphans = np.array(sorted(orphan_set), dtype=np.int64)

        new_faces = []
        for ea, eb in horizon:
            # (ea, eb, apex) keeps the outward orientation of the dead face
            nf = make_face(ea, eb, apex, orphans)
            register(nf)
            new_faces.append(nf)

        assigned = set()
        for nf in new_faces:
            nf.conflicts = [p for p in nf.conflicts if p not in assigned]
            assigned.update(nf.conflicts)
            if nf.conflicts:
                pending.append(nf)

    # edge_owner holds each live face three times; dedupe by identity
    live = {}
    for f in edge_owner.values():
        if f.alive:
            live[id(f)] = f
    tris = np.array([f.verts for f in live.values()], dtype=np.int64)

    used = np.unique(tris)
    remap = np.full(len(points), -1, dtype=np.int64)
    remap[used] = np.arange(len(used))
    return MeshGeometry(positions=points[used], triangles=remap[tris])


def hull_planes(hull: MeshGeometry) -> tuple:
    """Outward unit normals and offsets (n . x <= off inside) for a hull mesh.

    Orientation is fixed against the hull's vertex centroid, so the input
    winding does not matter. Zero-area faces are skipped.
    """
    pts = hull.positions
    tris = hull.triangles
    centroid = pts.mean(axis=0)
    a, b, c = pts[tris[:, 0]], pts[tris[:, 1]], pts[tris[:, 2]]
    n = np.cross(b - a, c - a)
    norms = np.linalg.norm(n, axis=1)
    keep = norms > 1e-300
    n = n[keep] / norms[keep, None]
    off = np.einsum("ij,ij->i", n, a[keep])
    inward = (n @ centroid) > off
    n[inward] = -n[inward]
    off[inward] = -off[inward]
    off = np.einsum("ij,ij->i", n, a[keep])
    return n, off


def _validate_convex(hull: MeshGeometry, normals, offsets):
    diag = bbox(hull, referenced_only=False).diagonal
    eps_cvx = 1e-8 * max(diag, 1.0)
    d = hull.positions @ normals.T - offsets[None, :]
    worst = float(d.max()) if d.size else 0.0
    if worst > eps_cvx:
        raise NonConvexHull(f"hull vertex lies {worst:.3e} outside a face plane")


def hull_volume(hull: MeshGeometry) -> float:
    """Hull volume as a sum of |tet| against the vertex centroid.

    Using absolute tet volumes makes the result independent of face winding,
    which matters for hulls loaded from sidecar files.
    """
    pts = hull.positions - hull.positions.mean(axis=0)
    a = pts[hull.triangles[:, 0]]
    b = pts[hull.triangles[:, 1]]
    c = pts[hull.triangles[:, 2]]
    return float(np.abs(np.einsum("ij,ij->i", np.cross(a, b), c)).sum() / 6.0)


def hull_report(mesh: MeshGeometry, hull: MeshGeometry | None = None) -> HullReport:
    """Containment and coverage of a hull against its source mesh.

    Containment counts mesh vertices within eps of all hull half-spaces,
    eps = 1e-6 * mesh bbox diagonal. Coverage is hull volume over mesh bbox
    volume (0 when the bbox has no volume).
    """
    if hull is None:
        hull = convex_hull(mesh)
    normals, offsets = hull_planes(hull)
    if len(normals) == 0:
        raise DegenerateInput("hull has no usable faces")
    _validate_convex(hull, normals, offsets)

    box = bbox(mesh)
    eps = 1e-6 * box.diagonal
    pts = mesh.referenced_positions()
    inside = kernels.contained_count(
        np.ascontiguousarray(pts),
        np.ascontiguousarray(normals),
        np.ascontiguousarray(offsets),
        eps,
    )
    v_box = box.volume
    coverage = hull_volume(hull) / v_box if v_box > 0 else 0.0
    return HullReport(
        hull_triangles=hull.face_count,
        vertex_containment=float(inside) / len(pts),
        volume_coverage=float(coverage),
    )


def max_extent(mesh: MeshGeometry) -> float:
    return float(bbox(mesh).extents.max())


def z_height(mesh: MeshGeometry) -> float:
    return float(bbox(mesh).extents[2])


def measure(mesh: MeshGeometry, axis: str = "z_height") -> float:
    """Single scalar size for the scale audit: Z extent or max extent."""
    if axis == "z_height":
        return z_height(mesh)
    if axis == "max_extent":
        return max_extent(mesh)
    raise ValueError(f"unknown measurement axis {axis!r}")
