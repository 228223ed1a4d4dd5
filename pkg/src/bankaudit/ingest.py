"""Parse GLB containers and the bank manifest into the shared data model.

The GLB reader covers exactly what the audit needs: float32 POSITION /
TEXCOORD_0 accessors, uint16/uint32 indices, node transforms baked into
vertices, and header-only probing of embedded PNG/JPEG textures. Skins,
animations, extensions, and every other glTF feature are ignored with a
warning. All parse operations are pure functions of their input bytes.
"""

from __future__ import annotations

import json
import logging
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    BadMagic,
    CorruptImageHeader,
    DuplicateId,
    GlbError,
    ManifestError,
    MissingField,
    NoMesh,
    TruncatedChunk,
    UnsupportedComponentType,
    UnsupportedVersion,
)

log = logging.getLogger("bankaudit.ingest")

GLB_MAGIC = 0x46546C67  # "glTF" little-endian
CHUNK_JSON = 0x4E4F534A  # "JSON"
CHUNK_BIN = 0x004E4942  # "BIN\0"

ANCHOR_TYPES = ("bottom", "top", "center")

_COMPONENT_DTYPES = {
    5123: np.dtype("<u2"),  # uint16
    5125: np.dtype("<u4"),  # uint32
    5126: np.dtype("<f4"),  # float32
}
_TYPE_COUNTS = {"SCALAR": 1, "VEC2": 2, "VEC3": 3, "VEC4": 4, "MAT4": 16}

# JPEG start-of-frame markers that carry image dimensions
_JPEG_SOF = {0xC0, 0xC1, 0xC2, 0xC3, 0xC5, 0xC6, 0xC7, 0xC9, 0xCA, 0xCB,
             0xCD, 0xCE, 0xCF}


@dataclass
class GlbContainer:
    """Raw chunks of a binary glTF container.

    Chunk bytes are kept exactly as read (including any in-chunk padding),
    so serialize() followed by parse_glb() round-trips them identically.
    """

    json_chunk: bytes
    bin_chunk: bytes | None
    declared_length: int

    def serialize(self) -> bytes:
        chunks = [(CHUNK_JSON, self.json_chunk)]
        if self.bin_chunk is not None:
            chunks.append((CHUNK_BIN, self.bin_chunk))
        total = 12 + sum(8 + len(c) for _, c in chunks)
        out = [struct.pack("<III", GLB_MAGIC, 2, total)]
        for ctype, data in chunks:
            out.append(struct.pack("<II", len(data), ctype))
            out.append(data)
        return b"".join(out)


@dataclass
class MeshGeometry:
    """Indexed triangle mesh in the asset's local frame (meters, Z up)."""

    positions: np.ndarray  # (n, 3) float64
    triangles: np.ndarray  # (m, 3) int64
    uvs: np.ndarray | None = None  # (n, 2) float64
    has_uv: bool = False

    def __post_init__(self):
        self.positions = np.ascontiguousarray(np.asarray(self.positions, dtype=np.float64))
        self.triangles = np.ascontiguousarray(np.asarray(self.triangles, dtype=np.int64))
        if self.positions.ndim != 2 or self.positions.shape[1] != 3:
            raise ValueError("positions must have shape (n, 3)")
        if self.triangles.size:
            if self.triangles.ndim != 2 or self.triangles.shape[1] != 3:
                raise ValueError("triangles must have shape (m, 3)")
            if self.triangles.min() < 0 or self.triangles.max() >= len(self.positions):
                raise ValueError("triangle index out of range")
        else:
            self.triangles = self.triangles.reshape(0, 3)
        if self.uvs is not None:
            self.uvs = np.asarray(self.uvs, dtype=np.float64)

    @property
    def face_count(self) -> int:
        return int(self.triangles.shape[0])

    def referenced_positions(self) -> np.ndarray:
        """Vertices used by at least one triangle (exporter debris excluded).

        Falls back to all vertices when the mesh has no triangles, so point
        sets still have a bounding box.
        """
        if self.face_count == 0:
            return self.positions
        return self.positions[np.unique(self.triangles)]


@dataclass
class MaterialProbe:
    texture_count: int = 0
    texture_dims: list = field(default_factory=list)  # [(w, h)] pixel pairs
    pbr_maps_present: set = field(default_factory=set)  # subset of {basecolor, normal, roughness}


@dataclass
class ManifestEntry:
    asset_id: str
    category: str
    subcategory: str
    description: str
    anchor_type: str  # bottom | top | center
    glb_path: str
    est_dims: tuple | None = None  # (x, y, z) meters
    image_path: str | None = None
    hull_path: str | None = None


# --- GLB container ----------------------------------------------------------

def parse_glb(data: bytes) -> GlbContainer:
    """Split a binary glTF container into its JSON and BIN chunks.

    Raises BadMagic / UnsupportedVersion / TruncatedChunk, each carrying the
    byte offset of the problem.
    """
    if len(data) < 4:
        raise TruncatedChunk(0, 4, len(data))
    magic = struct.unpack_from("<I", data, 0)[0]
    if magic != GLB_MAGIC:
        raise BadMagic(0, bytes(data[:4]))
    if len(data) < 12:
        raise TruncatedChunk(4, 12, len(data))
    version, declared = struct.unpack_from("<II", data, 4)
    if version != 2:
        raise UnsupportedVersion(version)
    if declared > len(data):
        raise TruncatedChunk(12, declared, len(data))

    json_chunk = None
    bin_chunk = None
    offset = 12
    while offset < declared:
        if offset + 8 > declared:
            raise TruncatedChunk(offset, 8, declared - offset)
        clen, ctype = struct.unpack_from("<II", data, offset)
        offset += 8
        if offset + clen > declared:
            raise TruncatedChunk(offset, clen, declared - offset)
        chunk = bytes(data[offset:offset + clen])
        offset += clen
        if ctype == CHUNK_JSON:
            if json_chunk is not None:
                raise GlbError("multiple JSON chunks")
            json_chunk = chunk
        elif ctype == CHUNK_BIN:
            if bin_chunk is not None:
                raise GlbError("multiple BIN chunks")
            bin_chunk = chunk
        else:
            log.warning("skipping unknown GLB chunk type 0x%08X (%d bytes)", ctype, clen)
    if json_chunk is None:
        raise GlbError("container has no JSON chunk")
    return GlbContainer(json_chunk=json_chunk, bin_chunk=bin_chunk, declared_length=declared)


def _read_accessor(gltf: dict, bin_chunk: bytes | None, index: int,
                   allowed: dict, semantic: str) -> np.ndarray:
    accessors = gltf.get("accessors", [])
    if not 0 <= index < len(accessors):
        raise GlbError(f"accessor index {index} out of range")
    acc = accessors[index]
    comp = acc.get("componentType")
    if comp not in allowed:
        raise UnsupportedComponentType(comp, semantic)
    if "sparse" in acc:
        raise GlbError("sparse accessors are not supported")
    count = int(acc.get("count", 0))
    ncomp = _TYPE_COUNTS.get(acc.get("type"))
    if ncomp is None:
        raise GlbError(f"unsupported accessor type {acc.get('type')!r} for {semantic}")
    dtype = _COMPONENT_DTYPES[comp]
    itemsize = dtype.itemsize * ncomp

    bv_index = acc.get("bufferView")
    if bv_index is None:
        return np.zeros((count, ncomp), dtype=dtype)
    bv = gltf.get("bufferViews", [])[bv_index]
    buffers = gltf.get("buffers", [])
    if bv.get("buffer", 0) != 0 or (buffers and buffers[0].get("uri") is not None):
        raise GlbError("only the embedded BIN buffer is supported")
    if bin_chunk is None:
        raise GlbError(f"accessor for {semantic} references a missing BIN chunk")

    base = int(bv.get("byteOffset", 0)) + int(acc.get("byteOffset", 0))
    stride = int(bv.get("byteStride") or itemsize)
    if count == 0:
        return np.zeros((0, ncomp), dtype=dtype)
    end = base + (count - 1) * stride + itemsize
    if end > len(bin_chunk):
        raise TruncatedChunk(base, end - base, len(bin_chunk) - base)

    if stride == itemsize:
        arr = np.frombuffer(bin_chunk, dtype=dtype, count=count * ncomp, offset=base)
        return arr.reshape(count, ncomp)
    raw = np.frombuffer(bin_chunk, dtype=np.uint8, offset=base,
                        count=(count - 1) * stride + itemsize)
    rows = raw[(np.arange(count)[:, None] * stride + np.arange(itemsize)[None, :])]
    return np.ascontiguousarray(rows).view(dtype).reshape(count, ncomp)


def _node_local_matrix(node: dict) -> np.ndarray:
    if "matrix" in node:
        return np.array(node["matrix"], dtype=np.float64).reshape(4, 4, order="F")
    m = np.eye(4)
    s = node.get("scale", (1.0, 1.0, 1.0))
    q = node.get("rotation", (0.0, 0.0, 0.0, 1.0))  # x, y, z, w
    t = node.get("translation", (0.0, 0.0, 0.0))
    x, y, z, w = (float(v) for v in q)
    rot = np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - z * w), 2 * (x * z + y * w)],
        [2 * (x * y + z * w), 1 - 2 * (x * x + z * z), 2 * (y * z - x * w)],
        [2 * (x * z - y * w), 2 * (y * z + x * w), 1 - 2 * (x * x + y * y)],
    ])
    m[:3, :3] = rot * np.asarray(s, dtype=np.float64)[None, :]
    m[:3, 3] = t
    return m


def _mesh_instances(gltf: dict):
    """Yield (mesh_index, world_matrix) for every mesh instance in the scene.

    Falls back to all meshes at identity when no scene references any mesh.
    """
    meshes = gltf.get("meshes", [])
    nodes = gltf.get("nodes", [])
    scenes = gltf.get("scenes", [])
    found = False
    if scenes and nodes:
        scene = scenes[gltf.get("scene", 0)]
        stack = [(idx, np.eye(4)) for idx in reversed(scene.get("nodes", []))]
        expansions = 0
        while stack:
            expansions += 1
            if expansions > 1_000_000:
                raise GlbError("node graph too large or cyclic")
            idx, parent = stack.pop()
            node = nodes[idx]
            world = parent @ _node_local_matrix(node)
            if "mesh" in node:
                found = True
                yield node["mesh"], world
            for child in reversed(node.get("children", [])):
                stack.append((child, world))
    if not found:
        for i in range(len(meshes)):
            yield i, np.eye(4)


def _probe_image_header(data: bytes) -> tuple:
    """Width/height from a PNG or JPEG header without decoding pixels."""
    if data[:8] == b"\x89PNG\r\n\x1a\n":
        if len(data) < 24 or data[12:16] != b"IHDR":
            raise CorruptImageHeader("PNG too short or missing IHDR")
        w, h = struct.unpack_from(">II", data, 16)
        if w <= 0 or h <= 0:
            raise CorruptImageHeader("PNG declares non-positive dimensions")
        return int(w), int(h)
    if data[:2] == b"\xff\xd8":
        i = 2
        n = len(data)
        while i + 4 <= n:
            if data[i] != 0xFF:
                raise CorruptImageHeader(f"bad JPEG marker byte at {i}")
            marker = data[i + 1]
            if marker == 0xFF:  # fill byte
                i += 1
                continue
            if marker in (0xD8, 0x01) or 0xD0 <= marker <= 0xD7:
                i += 2
                continue
            if i + 4 > n:
                break
            seg_len = struct.unpack_from(">H", data, i + 2)[0]
            if marker in _JPEG_SOF:
                if i + 9 > n:
                    break
                h = struct.unpack_from(">H", data, i + 5)[0]
                w = struct.unpack_from(">H", data, i + 7)[0]
                if w <= 0 or h <= 0:
                    raise CorruptImageHeader("JPEG SOF declares non-positive dimensions")
                return int(w), int(h)
            i += 2 + seg_len
        raise CorruptImageHeader("no JPEG SOF marker found")
    raise CorruptImageHeader(f"unrecognized image signature {bytes(data[:4])!r}")


def _bufferview_bytes(gltf: dict, bin_chunk: bytes | None, index: int) -> bytes:
    bv = gltf.get("bufferViews", [])[index]
    if bv.get("buffer", 0) != 0 or bin_chunk is None:
        raise GlbError("image bufferView outside the BIN chunk")
    start = int(bv.get("byteOffset", 0))
    length = int(bv["byteLength"])
    if start + length > len(bin_chunk):
        raise TruncatedChunk(start, length, len(bin_chunk) - start)
    return bin_chunk[start:start + length]


def _material_probe(gltf: dict, bin_chunk: bytes | None) -> MaterialProbe:
    probe = MaterialProbe()
    images = gltf.get("images", [])
    textures = gltf.get("textures", [])
    probe.texture_count = len(textures)
    for tex in textures:
        src = tex.get("source")
        if src is None or not 0 <= src < len(images):
            continue
        image = images[src]
        if "bufferView" not in image:
            log.warning("texture references an external image; skipping size probe")
            continue
        probe.texture_dims.append(
            _probe_image_header(_bufferview_bytes(gltf, bin_chunk, image["bufferView"]))
        )
    for mat in gltf.get("materials", []):
        pbr = mat.get("pbrMetallicRoughness", {})
        if pbr.get("baseColorTexture") is not None:
            probe.pbr_maps_present.add("basecolor")
        if pbr.get("metallicRoughnessTexture") is not None:
            probe.pbr_maps_present.add("roughness")
        if mat.get("normalTexture") is not None:
            probe.pbr_maps_present.add("normal")
    return probe


def extract_geometry(container: GlbContainer) -> tuple:
    """Decode (MeshGeometry, MaterialProbe) from a parsed container.

    Node transforms are baked into vertex positions, so the mesh origin is
    the GLB's world origin. Multiple primitives and mesh instances are
    concatenated into one mesh (the audit treats an asset as one object).
    """
    try:
        gltf = json.loads(container.json_chunk.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise GlbError(f"JSON chunk does not parse: {exc}") from exc
    for feature in ("skins", "animations", "extensionsRequired"):
        if gltf.get(feature):
            log.warning("ignoring glTF feature %r (audit reads geometry/textures only)", feature)

    meshes = gltf.get("meshes", [])
    if not meshes:
        raise NoMesh("container defines no meshes")

    pos_parts = []
    tri_parts = []
    uv_parts = []  # aligned with pos_parts; None where the primitive has no UVs
    any_uv = False
    offset = 0
    for mesh_index, world in _mesh_instances(gltf):
        mesh = meshes[mesh_index]
        for prim in mesh.get("primitives", []):
            mode = prim.get("mode", 4)
            if mode != 4:
                log.warning("skipping non-triangle primitive (mode %d)", mode)
                continue
            attrs = prim.get("attributes", {})
            if "POSITION" not in attrs:
                log.warning("skipping primitive without POSITION")
                continue
            pos = _read_accessor(gltf, container.bin_chunk, attrs["POSITION"],
                                 {5126: None}, "POSITION").astype(np.float64)
            if "indices" in prim:
                idx = _read_accessor(gltf, container.bin_chunk, prim["indices"],
                                     {5123: None, 5125: None}, "indices")
                tris = idx.reshape(-1).astype(np.int64)
                if tris.size % 3:
                    raise GlbError("index count is not a multiple of 3")
                tris = tris.reshape(-1, 3)
                if tris.size and tris.max() >= len(pos):
                    raise GlbError("triangle index out of range")
            else:
                if len(pos) % 3:
                    raise GlbError("non-indexed primitive vertex count not a multiple of 3")
                tris = np.arange(len(pos), dtype=np.int64).reshape(-1, 3)
            rot = world[:3, :3]
            pos = pos @ rot.T + world[:3, 3]
            if "TEXCOORD_0" in attrs:
                uv = _read_accessor(gltf, container.bin_chunk, attrs["TEXCOORD_0"],
                                    {5126: None}, "TEXCOORD_0").astype(np.float64)
                any_uv = True
            else:
                uv = None
            pos_parts.append(pos)
            uv_parts.append(uv)
            tri_parts.append(tris + offset)
            offset += len(pos)

    if not pos_parts:
        raise NoMesh("no triangle primitive with a POSITION accessor")

    positions = np.concatenate(pos_parts)
    triangles = np.concatenate(tri_parts)
    uvs = None
    if any_uv:
        uvs = np.concatenate([
            uv if uv is not None else np.zeros((len(p), 2))
            for uv, p in zip(uv_parts, pos_parts)
        ])
    geometry = MeshGeometry(positions=positions, triangles=triangles, uvs=uvs, has_uv=any_uv)
    return geometry, _material_probe(gltf, container.bin_chunk)


def load_glb(path) -> tuple:
    """Convenience: read a .glb file and return (MeshGeometry, MaterialProbe)."""
    return extract_geometry(parse_glb(Path(path).read_bytes()))


def mean_texture_size(probes) -> float | None:
    """Mean of max(width, height) across all probed textures, or None."""
    sizes = [max(w, h) for p in probes for (w, h) in p.texture_dims]
    if not sizes:
        return None
    return float(sum(sizes) / len(sizes))


# --- manifest ---------------------------------------------------------------

_REQUIRED_FIELDS = ("asset_id", "category", "subcategory", "description",
                    "anchor_type", "glb_path")


def load_manifest(path) -> list:
    """Parse a JSON Lines manifest into ManifestEntry records, file order.

    One JSON object per line; blank lines ignored. Required fields:
    asset_id, category, subcategory, description, anchor_type, glb_path.
    Optional: est_dims ([x, y, z] meters), image_path, hull_path. Paths are
    kept relative; callers resolve them against the manifest's directory.
    """
    entries = []
    seen = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            text = line.strip()
            if not text:
                continue
            try:
                obj = json.loads(text)
            except json.JSONDecodeError as exc:
                raise ManifestError(f"line {lineno}: not a JSON record: {exc}") from exc
            if not isinstance(obj, dict):
                raise ManifestError(f"line {lineno}: record is not an object")
            for fname in _REQUIRED_FIELDS:
                if obj.get(fname) in (None, ""):
                    raise MissingField(fname, lineno)
            if obj["anchor_type"] not in ANCHOR_TYPES:
                raise ManifestError(
                    f"line {lineno}: anchor_type must be one of {ANCHOR_TYPES}, "
                    f"got {obj['anchor_type']!r}"
                )
            asset_id = str(obj["asset_id"])
            if asset_id in seen:
                raise DuplicateId(asset_id, lineno)
            seen.add(asset_id)
            est = obj.get("est_dims")
            if est is not None:
                if (not isinstance(est, (list, tuple)) or len(est) != 3
                        or not all(isinstance(v, (int, float)) for v in est)):
                    raise ManifestError(f"line {lineno}: est_dims must be three numbers")
                est = tuple(float(v) for v in est)
            entries.append(ManifestEntry(
                asset_id=asset_id,
                category=str(obj["category"]),
                subcategory=str(obj["subcategory"]),
                description=str(obj["description"]),
                anchor_type=str(obj["anchor_type"]),
                glb_path=str(obj["glb_path"]),
                est_dims=est,
                image_path=obj.get("image_path"),
                hull_path=obj.get("hull_path"),
            ))
    return entries
