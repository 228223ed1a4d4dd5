"""Tiny GLB builder for sidecar tests: triangle primitives, packed buffers."""

import json
import struct

import numpy as np

_CTYPES = {
    np.dtype("<u1"): 5121,
    np.dtype("<u2"): 5123,
    np.dtype("<u4"): 5125,
}


def wrap_glb(json_bytes: bytes, bin_bytes: bytes) -> bytes:
    while len(json_bytes) % 4:
        json_bytes += b" "
    while len(bin_bytes) % 4:
        bin_bytes += b"\x00"
    total = 12 + 8 + len(json_bytes) + 8 + len(bin_bytes)
    out = b"glTF" + struct.pack("<II", 2, total)
    out += struct.pack("<II", len(json_bytes), 0x4E4F534A) + json_bytes
    out += struct.pack("<II", len(bin_bytes), 0x004E4942) + bin_bytes
    return out


def build_glb(prims, mode=4, index_dtype=None) -> bytes:
    """prims: list of (positions, triangles) pairs; triangles=None makes a
    non-indexed primitive. All primitives land in one mesh."""
    views = []
    accessors = []
    mesh_prims = []
    blob = b""
    for positions, triangles in prims:
        pos = np.asarray(positions, dtype="<f4")
        while len(blob) % 4:
            blob += b"\x00"
        views.append({"buffer": 0, "byteOffset": len(blob), "byteLength": pos.nbytes})
        blob += pos.tobytes()
        accessors.append({
            "bufferView": len(views) - 1, "componentType": 5126,
            "count": len(pos), "type": "VEC3",
            "min": [float(v) for v in pos.min(axis=0)],
            "max": [float(v) for v in pos.max(axis=0)],
        })
        prim = {"attributes": {"POSITION": len(accessors) - 1}, "mode": mode}
        if triangles is not None:
            idx = np.asarray(triangles).reshape(-1)
            if index_dtype is not None:
                dtype = np.dtype(index_dtype)
            elif idx.size and idx.max() > 0xFFFF:
                dtype = np.dtype("<u4")
            else:
                dtype = np.dtype("<u2")
            idx = idx.astype(dtype)
            while len(blob) % 4:
                blob += b"\x00"
            views.append({"buffer": 0, "byteOffset": len(blob), "byteLength": idx.nbytes})
            blob += idx.tobytes()
            accessors.append({"bufferView": len(views) - 1, "componentType": _CTYPES[dtype],
                              "count": int(idx.size), "type": "SCALAR"})
            prim["indices"] = len(accessors) - 1
        mesh_prims.append(prim)

    doc = {
        "asset": {"version": "2.0"},
        "buffers": [{"byteLength": len(blob)}],
        "bufferViews": views,
        "accessors": accessors,
        "meshes": [{"primitives": mesh_prims}],
        "nodes": [{"mesh": 0}],
        "scenes": [{"nodes": [0]}],
        "scene": 0,
    }
    return wrap_glb(json.dumps(doc).encode("utf-8"), blob)


def cube(edge=1.0, center=(0.0, 0.0, 0.0)):
    """Axis-aligned cube, outward winding (same layout the core fixtures use)."""
    h = edge / 2.0
    cx, cy, cz = center
    positions = [
        (cx - h, cy - h, cz - h), (cx + h, cy - h, cz - h),
        (cx + h, cy + h, cz - h), (cx - h, cy + h, cz - h),
        (cx - h, cy - h, cz + h), (cx + h, cy - h, cz + h),
        (cx + h, cy + h, cz + h), (cx - h, cy + h, cz + h),
    ]
    triangles = [
        (0, 2, 1), (0, 3, 2),
        (4, 5, 6), (4, 6, 7),
        (0, 1, 5), (0, 5, 4),
        (2, 3, 7), (2, 7, 6),
        (0, 4, 7), (0, 7, 3),
        (1, 2, 6), (1, 6, 5),
    ]
    return positions, triangles


def write_glb(path, positions, triangles, **kw):
    path.write_bytes(build_glb([(positions, triangles)], **kw))
    return path
