"""Error taxonomy for the embed sidecar."""


class EmbedSidecarError(Exception):
    """Base class for everything bankembed raises on purpose."""


class GlbReadError(EmbedSidecarError):
    """The GLB container or its mesh data cannot be read."""


class RenderFailure(EmbedSidecarError):
    def __init__(self, asset_id: str, reason: str):
        super().__init__(f"{asset_id}: {reason}")
        self.asset_id = asset_id
        self.reason = reason


class ModelLoadFailure(EmbedSidecarError):
    """Embedding model weights or runtime are unavailable."""

    def __init__(self, model_id: str, reason: str):
        super().__init__(f"{model_id}: {reason}")
        self.model_id = model_id
        self.reason = reason


class TableWriteError(EmbedSidecarError):
    """Rows refused before any bytes are produced (mixed dims, bad tags,
    duplicate (id, tag) pairs, oversized ids)."""


class IoFailure(EmbedSidecarError):
    """Filesystem trouble while writing an output file."""
