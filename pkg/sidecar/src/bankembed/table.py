"""Writer for the binary embedding table the auditing core reads.

Layout (little-endian): magic "EMBT", u32 version=1, u32 dim, u32
row_count, then per row a u16 id length, the UTF-8 id bytes, a u8
modality tag, and dim float32 values. Rows are sorted by (asset id, tag)
so identical inputs serialize identically. Stored floats are never
normalized or otherwise touched: what the embedder produced is exactly
what a reader gets back.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .errors import IoFailure, TableWriteError

MAGIC = b"EMBT"
FORMAT_VERSION = 1

TAG_TEXT = 0
TAG_REF_IMAGE = 1
TAG_VIEW_PX = 2
TAG_VIEW_NX = 3
TAG_VIEW_PY = 4
TAG_VIEW_NY = 5
TAG_QUERY = 6
VIEW_TAGS = (TAG_VIEW_PX, TAG_VIEW_NX, TAG_VIEW_PY, TAG_VIEW_NY)

_VALID_TAGS = frozenset(range(7))


@dataclass(frozen=True)
class EmbeddingRow:
    asset_id: str
    tag: int
    vector: np.ndarray


def pack_table(rows, dim: int | None = None) -> bytes:
    """Serialize rows to EMBT bytes.

    dim is inferred from the first row when omitted; an empty table needs
    it spelled out. All validation happens before any bytes are built, so
    a raise here means nothing was produced.
    """
    rows = list(rows)
    vecs = []
    seen = set()
    for i, row in enumerate(rows):
        if row.tag not in _VALID_TAGS:
            raise TableWriteError(f"row {i} ({row.asset_id!r}): invalid modality tag {row.tag}")
        v = np.asarray(row.vector, dtype="<f4")
        if v.ndim != 1:
            raise TableWriteError(f"row {i} ({row.asset_id!r}): vector must be 1-D, got shape {v.shape}")
        if dim is None:
            dim = v.size
        if v.size != dim:
            raise TableWriteError(f"row {i} ({row.asset_id!r}): dim {v.size} != {dim}")
        if len(row.asset_id.encode("utf-8")) > 0xFFFF:
            raise TableWriteError(f"row {i}: asset id longer than 65535 bytes")
        key = (row.asset_id, row.tag)
        if key in seen:
            raise TableWriteError(f"duplicate row for {key}")
        seen.add(key)
        vecs.append(v)
    if dim is None:
        raise TableWriteError("empty table needs an explicit dim")
    if dim <= 0:
        raise TableWriteError("dim must be positive")

    order = sorted(range(len(vecs)), key=lambda i: (rows[i].asset_id, rows[i].tag))
    out = [MAGIC, struct.pack("<III", FORMAT_VERSION, dim, len(vecs))]
    for i in order:
        raw = rows[i].asset_id.encode("utf-8")
        out.append(struct.pack("<H", len(raw)))
        out.append(raw)
        out.append(struct.pack("<B", rows[i].tag))
        out.append(vecs[i].tobytes())
    return b"".join(out)


def write_table(rows, path, dim: int | None = None) -> None:
    """pack_table to disk; refused rows never touch the filesystem."""
    blob = pack_table(rows, dim=dim)
    try:
        with open(path, "wb") as fh:
            fh.write(blob)
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc
