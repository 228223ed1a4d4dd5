"""Minimal GLB (binary glTF) reader: positions and triangles, nothing else.

The auditing core has a full ingest module; the sidecar deliberately does
not import it. This reader understands exactly what rendering needs: the
POSITION attribute and indices of every TRIANGLES primitive, concatenated
across meshes. Node transforms, skins, morph targets, and non-triangle
modes are out of scope.
"""

from __future__ import annotations

import json
import struct

import numpy as np

from .errors import GlbReadError

_MAGIC = b"glTF"
_CHUNK_JSON = 0x4E4F534A
_CHUNK_BIN = 0x004E4942

_COMPONENT_DTYPES = {
    5121: np.dtype("<u1"),
    5123: np.dtype("<u2"),
    5125: np.dtype("<u4"),
    5126: np.dtype("<f4"),
}
_TYPE_WIDTHS = {"SCALAR": 1, "VEC2": 2, "VEC3": 3, "VEC4": 4}


def _accessor_array(doc: dict, blob: bytes, index: int) -> np.ndarray:
    try:
        acc = doc["accessors"][index]
        view = doc["bufferViews"][acc["bufferView"]]
    except (KeyError, IndexError, TypeError) as exc:
        raise GlbReadError(f"accessor {index}: {exc!r}") from exc
    dtype = _COMPONENT_DTYPES.get(acc.get("componentType"))
    width = _TYPE_WIDTHS.get(acc.get("type"))
    if dtype is None or width is None:
        raise GlbReadError(
            f"accessor {index}: unsupported componentType/type "
            f"{acc.get('componentType')}/{acc.get('type')}"
        )
    count = acc.get("count", 0)
    item = dtype.itemsize * width
    stride = view.get("byteStride", item)
    start = view.get("byteOffset", 0) + acc.get("byteOffset", 0)
    if count == 0:
        return np.zeros((0, width) if width > 1 else 0, dtype=dtype)
    end = start + stride * (count - 1) + item
    if end > len(blob):
        raise GlbReadError(f"accessor {index}: data runs past the binary chunk")
    if stride == item:
        arr = np.frombuffer(blob, dtype=dtype, count=count * width, offset=start)
    else:
        raw = np.frombuffer(blob, dtype=np.uint8)
        offsets = start + stride * np.arange(count)[:, None] + np.arange(item)[None, :]
        arr = raw[offsets].copy().view(dtype)
    arr = arr.reshape(count, width) if width > 1 else arr.reshape(count)
    return arr


def load_mesh(path) -> tuple[np.ndarray, np.ndarray]:
    """All triangle geometry in one (positions, triangles) pair.

    positions: (n, 3) float64. triangles: (m, 3) int64, indices already
    offset so primitives share one vertex array.
    """
    try:
        with open(path, "rb") as fh:
            data = fh.read()
    except OSError as exc:
        raise GlbReadError(f"cannot read {path}: {exc}") from exc

    if len(data) < 12 or data[:4] != _MAGIC:
        raise GlbReadError("not a GLB container (bad magic)")
    version, declared = struct.unpack_from("<II", data, 4)
    if version != 2:
        raise GlbReadError(f"unsupported glTF version {version}")

    json_chunk = None
    bin_chunk = b""
    offset = 12
    while offset + 8 <= min(len(data), declared):
        length, kind = struct.unpack_from("<II", data, offset)
        offset += 8
        if offset + length > len(data):
            raise GlbReadError("chunk runs past end of file")
        payload = data[offset:offset + length]
        offset += length
        if kind == _CHUNK_JSON and json_chunk is None:
            json_chunk = payload
        elif kind == _CHUNK_BIN and not bin_chunk:
            bin_chunk = payload
    if json_chunk is None:
        raise GlbReadError("no JSON chunk")
    try:
        doc = json.loads(json_chunk)
    except json.JSONDecodeError as exc:
        raise GlbReadError(f"JSON chunk does not parse: {exc}") from exc

    positions = []
    triangles = []
    base = 0
    for mesh in doc.get("meshes", []):
        for prim in mesh.get("primitives", []):
            if prim.get("mode", 4) != 4:
                continue
            attrs = prim.get("attributes", {})
            if "POSITION" not in attrs:
                raise GlbReadError("triangle primitive has no POSITION attribute")
            pos = _accessor_array(doc, bin_chunk, attrs["POSITION"])
            if pos.ndim != 2 or pos.shape[1] != 3:
                raise GlbReadError("POSITION accessor is not VEC3")
            pos = pos.astype(np.float64)
            if "indices" in prim:
                idx = _accessor_array(doc, bin_chunk, prim["indices"])
                idx = np.asarray(idx, dtype=np.int64).reshape(-1)
            else:
                idx = np.arange(len(pos), dtype=np.int64)
            if idx.size % 3:
                raise GlbReadError(f"index count {idx.size} is not a multiple of 3")
            if idx.size and (idx.min() < 0 or idx.max() >= len(pos)):
                raise GlbReadError("triangle index out of range")
            positions.append(pos)
            triangles.append(idx.reshape(-1, 3) + base)
            base += len(pos)

    if not positions:
        raise GlbReadError("no triangle primitives in scene")
    return np.vstack(positions), np.vstack(triangles)
