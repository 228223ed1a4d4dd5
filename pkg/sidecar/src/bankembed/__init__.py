"""bankembed: render-and-embed sidecar producing embedding tables for 3D
asset bank audits.

The package is intentionally independent of the auditing core: it talks
to it only through files (the JSONL manifest in, the EMBT embedding
table out).
"""

__version__ = "0.1.0"

from .classify import classify_fixed_vocab
from .embed import (
    CLASSIFY_MODEL_DEFAULT,
    HASH_MODEL_ID,
    TEXT_MODEL_DEFAULT,
    ClipEmbedder,
    HashEmbedder,
    embed_batch,
    make_embedder,
)
from .errors import (
    EmbedSidecarError,
    GlbReadError,
    IoFailure,
    ModelLoadFailure,
    RenderFailure,
    TableWriteError,
)
from .render import RenderSpec, VIEW_NAMES, render_mesh_views, render_views
from .table import (
    EmbeddingRow,
    TAG_QUERY,
    TAG_REF_IMAGE,
    TAG_TEXT,
    VIEW_TAGS,
    pack_table,
    write_table,
)

__all__ = [
    "CLASSIFY_MODEL_DEFAULT",
    "ClipEmbedder",
    "EmbeddingRow",
    "EmbedSidecarError",
    "GlbReadError",
    "HASH_MODEL_ID",
    "HashEmbedder",
    "IoFailure",
    "ModelLoadFailure",
    "RenderFailure",
    "RenderSpec",
    "TAG_QUERY",
    "TAG_REF_IMAGE",
    "TAG_TEXT",
    "TEXT_MODEL_DEFAULT",
    "TableWriteError",
    "VIEW_NAMES",
    "VIEW_TAGS",
    "classify_fixed_vocab",
    "embed_batch",
    "make_embedder",
    "pack_table",
    "render_mesh_views",
    "render_views",
    "write_table",
]
