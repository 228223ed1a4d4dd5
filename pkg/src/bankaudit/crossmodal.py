"""Embedding-table IO and cross-modal coherence / retrieval metrics.

The binary table format (magic "EMBT") is little-endian:

    magic      4 bytes  "EMBT"
    version    u32      1
    dim        u32      vector length
    row_count  u32
    rows       row_count times:
        id_len   u16
        id       id_len bytes UTF-8
        modality u8 (see MODALITIES)
        vector   dim float32

Vectors are stored and kept raw (bit-exact round trips); normalization
happens inside the similarity operations only.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass

import numpy as np

from .errors import (
    BadHeader,
    DimMismatch,
    DuplicateRow,
    EmbeddingError,
    MissingTarget,
    NoOverlap,
    ZeroNorm,
)

MAGIC = b"EMBT"
FORMAT_VERSION = 1

MODALITIES = ("text", "ref_image", "view_px", "view_nx", "view_py", "view_ny", "query")
_TAG_TO_MODALITY = dict(enumerate(MODALITIES))
_MODALITY_TO_TAG = {m: t for t, m in _TAG_TO_MODALITY.items()}

VIEW_MODALITIES = ("view_px", "view_nx", "view_py", "view_ny")

COHERENCE_PAIRS = ("text_ref", "text_3d", "ref_3d")


@dataclass
class EmbeddingTable:
    dim: int
    rows: dict  # (asset_id, modality) -> float32 vector, raw as stored

    def ids_with(self, modality: str) -> list:
        return sorted(i for (i, m) in self.rows if m == modality)

    def get(self, asset_id: str, modality: str) -> np.ndarray | None:
        return self.rows.get((asset_id, modality))


def read_embeddings(data: bytes) -> EmbeddingTable:
    """Parse an EMBT blob. Framing errors raise BadHeader; a float block cut
    short raises DimMismatch (the row declared more floats than remain)."""
    if len(data) < 16:
        raise BadHeader(f"table too short for a header ({len(data)} bytes)")
    if data[:4] != MAGIC:
        raise BadHeader(f"bad magic {bytes(data[:4])!r}")
    version, dim, row_count = struct.unpack_from("<III", data, 4)
    if version != FORMAT_VERSION:
        raise BadHeader(f"unsupported version {version}")
    if dim == 0:
        raise BadHeader("dim is zero")

    rows = {}
    offset = 16
    vec_bytes = 4 * dim
    for row in range(row_count):
        if offset + 2 > len(data):
            raise BadHeader(f"row {row}: truncated id length at byte {offset}")
        (id_len,) = struct.unpack_from("<H", data, offset)
        offset += 2
        if offset + id_len + 1 > len(data):
            raise BadHeader(f"row {row}: truncated id or modality at byte {offset}")
        try:
            asset_id = data[offset:offset + id_len].decode("utf-8")
        except UnicodeDecodeError as exc:
            raise BadHeader(f"row {row}: id is not UTF-8") from exc
        offset += id_len
        tag = data[offset]
        offset += 1
        modality = _TAG_TO_MODALITY.get(tag)
        if modality is None:
            raise BadHeader(f"row {row}: unknown modality tag {tag}")
        remaining = len(data) - offset
        if remaining < vec_bytes:
            raise DimMismatch(dim, remaining // 4, row)
        vec = np.frombuffer(data, dtype="<f4", count=dim, offset=offset).copy()
        offset += vec_bytes
        key = (asset_id, modality)
        if key in rows:
            raise DuplicateRow(asset_id, modality)
        rows[key] = vec
    if offset != len(data):
        raise BadHeader(f"{len(data) - offset} trailing bytes after row {row_count - 1}")
    return EmbeddingTable(dim=dim, rows=rows)


def write_embeddings(table: EmbeddingTable) -> bytes:
    """Serialize a table; rows sorted by (asset_id, modality tag)."""
    keys = sorted(table.rows, key=lambda k: (k[0], _MODALITY_TO_TAG[k[1]]))
    out = [MAGIC, struct.pack("<III", FORMAT_VERSION, table.dim, len(keys))]
    for asset_id, modality in keys:
        raw = asset_id.encode("utf-8")
        vec = np.asarray(table.rows[(asset_id, modality)], dtype="<f4")
        if vec.shape != (table.dim,):
            raise EmbeddingError(
                f"vector for ({asset_id}, {modality}) has shape {vec.shape}, "
                f"expected ({table.dim},)"
            )
        out.append(struct.pack("<H", len(raw)))
        out.append(raw)
        out.append(struct.pack("<B", _MODALITY_TO_TAG[modality]))
        out.append(vec.tobytes())
    return b"".join(out)


def load_embeddings(path) -> EmbeddingTable:
    with open(path, "rb") as fh:
        return read_embeddings(fh.read())


# --- similarity -------------------------------------------------------------

def _unit(v: np.ndarray) -> np.ndarray:
    v = np.asarray(v, dtype=np.float64)
    n = np.linalg.norm(v)
    if n < 1e-12:
        raise ZeroNorm("vector norm below 1e-12")
    return v / n


def cosine(a, b) -> float:
    return float(_unit(a) @ _unit(b))


def pool_views(vectors, method: str = "mean") -> np.ndarray:
    """Pooled 3D representation from the four view vectors.

    mean: L2-normalized mean of the four vectors (one unit vector).
    max_sim: the four vectors normalized individually, stacked (4, dim);
    similarity against the stack is the max over rows.
    """
    views = [np.asarray(v, dtype=np.float64) for v in vectors]
    if len(views) != 4:
        raise EmbeddingError(f"pooling needs exactly 4 view vectors, got {len(views)}")
    if any(v.shape != views[0].shape for v in views):
        raise EmbeddingError("view vectors disagree on dim")
    if method == "mean":
        return _unit(np.mean(views, axis=0))
    if method == "max_sim":
        return np.stack([_unit(v) for v in views])
    raise ValueError(f"unknown pooling method {method!r}")


def asset_views(table: EmbeddingTable, asset_id: str) -> list:
    """The four view vectors of an asset, in +X, -X, +Y, -Y order."""
    views = []
    for m in VIEW_MODALITIES:
        v = table.get(asset_id, m)
        if v is None:
            raise EmbeddingError(f"{asset_id}: missing view {m}")
        views.append(v)
    return views


def similarity_to_views(query_vec, pooled: np.ndarray) -> float:
    """Cosine against a pooled representation (vector or view stack)."""
    q = _unit(query_vec)
    if pooled.ndim == 1:
        return float(q @ pooled)
    return float((pooled @ q).max())


@dataclass(frozen=True)
class CoherenceStats:
    pair: str
    n: int
    mean: float
    std: float  # population std
    hist_counts: tuple  # 200 bins over [-1, 1]
    bin_width: float


def coherence_stats(table: EmbeddingTable, pair: str, bin_width: float = 0.01) -> CoherenceStats:
    """Cosine-similarity distribution between two modalities per asset.

    text_ref: text vs reference image. text_3d / ref_3d: against the
    mean-pooled four views. Assets missing either side are skipped; no
    overlapping asset at all raises NoOverlap. Histogram covers [-1, 1]
    at the given bin width.
    """
    if pair not in COHERENCE_PAIRS:
        raise ValueError(f"pair must be one of {COHERENCE_PAIRS}")
    left_mod = {"text_ref": "text", "text_3d": "text", "ref_3d": "ref_image"}[pair]

    sims = []
    if pair == "text_ref":
        ids = sorted(set(self_ids(table, "text")) & set(self_ids(table, "ref_image")))
        for asset_id in ids:
            sims.append(cosine(table.get(asset_id, "text"), table.get(asset_id, "ref_image")))
    else:
        with_views = set(gallery_ids(table))
        ids = sorted(set(self_ids(table, left_mod)) & with_views)
        for asset_id in ids:
            pooled = pool_views(asset_views(table, asset_id), "mean")
            sims.append(similarity_to_views(table.get(asset_id, left_mod), pooled))
    if not sims:
        raise NoOverlap(f"no asset has both sides of {pair}")

    arr = np.array(sims)
    n_bins = max(1, int(round(2.0 / bin_width)))
    counts, edges = np.histogram(arr, bins=np.linspace(-1.0, 1.0, n_bins + 1))
    return CoherenceStats(
        pair=pair,
        n=len(arr),
        mean=float(arr.mean()),
        std=float(arr.std()),
        hist_counts=tuple(int(c) for c in counts),
        bin_width=float(edges[1] - edges[0]),
    )


def self_ids(table: EmbeddingTable, modality: str) -> list:
    return table.ids_with(modality)


def gallery_ids(table: EmbeddingTable) -> list:
    """Assets with all four view embeddings, sorted by id."""
    ids = set(table.ids_with(VIEW_MODALITIES[0]))
    for m in VIEW_MODALITIES[1:]:
        ids &= set(table.ids_with(m))
    return sorted(ids)


# --- retrieval --------------------------------------------------------------

@dataclass(frozen=True)
class RetrievalResult:
    ranks: dict  # query_id -> 1-based rank of its target
    recall_at: dict  # k -> fraction of queries with rank <= k
    median_rank: float
    gallery_size: int
    method: str


def load_query_meta(path) -> dict:
    """JSON Lines of {query_id, query_text, target_asset_id} -> target map."""
    targets = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            obj = json.loads(line)
            qid = obj.get("query_id")
            target = obj.get("target_asset_id")
            if not qid or not target:
                raise EmbeddingError(
                    f"query meta line {lineno}: need query_id and target_asset_id"
                )
            if qid in targets:
                raise EmbeddingError(f"duplicate query_id {qid!r} at line {lineno}")
            targets[qid] = target
    return targets


def retrieval(
    queries: EmbeddingTable,
    gallery: EmbeddingTable,
    targets: dict,
    ks=(1, 5, 10, 25),
    method: str = "mean",
) -> RetrievalResult:
    """Rank each query's target among all gallery assets.

    Rank = 1 + (# assets with higher similarity) + (# tied assets whose id
    sorts before the target), so equal scores resolve deterministically.
    The median over an even query count takes the lower middle value.
    """
    if queries.dim != gallery.dim:
        raise DimMismatch(gallery.dim, queries.dim, -1)
    qids = queries.ids_with("query")
    if not qids:
        raise EmbeddingError("query table has no rows with the query modality")
    g_ids = gallery_ids(gallery)
    if not g_ids:
        raise EmbeddingError("gallery has no asset with all four views")
    for qid in qids:
        if qid not in targets:
            raise EmbeddingError(f"no metadata for query {qid!r}")
        if targets[qid] not in g_ids:
            raise MissingTarget(qid, targets[qid])

    pooled = [pool_views(asset_views(gallery, a), method) for a in g_ids]
    ranks = {}
    for qid in qids:
        q = _unit(queries.get(qid, "query"))
        if method == "mean":
            sims = np.array([float(q @ p) for p in pooled])
        else:
            sims = np.array([float((p @ q).max()) for p in pooled])
        target = targets[qid]
        t_idx = g_ids.index(target)
        t_sim = sims[t_idx]
        higher = int((sims > t_sim).sum())
        tied_before = sum(
            1 for i, s in enumerate(sims) if s == t_sim and g_ids[i] < target
        )
        ranks[qid] = 1 + higher + tied_before

    rank_values = sorted(ranks.values())
    n = len(rank_values)
    median = float(rank_values[(n - 1) // 2])  # lower middle for even n
    recall_at = {}
    prev = None
    for k in sorted(ks):
        frac = sum(1 for r in rank_values if r <= k) / n
        if prev is not None and frac < prev:
            raise AssertionError("recall@k must be monotone in k")
        prev = frac
        recall_at[int(k)] = frac
    return RetrievalResult(
        ranks=ranks,
        recall_at=recall_at,
        median_rank=median,
        gallery_size=len(g_ids),
        method=method,
    )
