"""Typed errors raised across the audit library.

Every failure mode named in a module contract gets its own class so callers
can catch precisely. Parse errors carry byte offsets where that helps
debugging a corrupt container.
"""


class BankAuditError(Exception):
    """Base class for all library errors."""


# --- ingest ---------------------------------------------------------------

class GlbError(BankAuditError):
    """Base for GLB container/geometry decode failures."""


class BadMagic(GlbError):
    def __init__(self, offset: int = 0, found: bytes = b""):
        super().__init__(f"bad GLB magic at offset {offset}: {found!r}")
        self.offset = offset
        self.found = bytes(found)


class UnsupportedVersion(GlbError):
    def __init__(self, version: int, offset: int = 4):
        super().__init__(f"unsupported GLB container version {version} at offset {offset}")
        self.version = version
        self.offset = offset


class TruncatedChunk(GlbError):
    def __init__(self, offset: int, needed: int, available: int):
        super().__init__(
            f"truncated GLB at offset {offset}: need {needed} bytes, have {available}"
        )
        self.offset = offset


class NoMesh(GlbError):
    """Container holds no mesh primitive with a POSITION accessor."""


class UnsupportedComponentType(GlbError):
    def __init__(self, component_type: int, semantic: str):
        super().__init__(f"unsupported componentType {component_type} for {semantic}")
        self.component_type = component_type
        self.semantic = semantic


class CorruptImageHeader(GlbError):
    """Embedded PNG/JPEG header could not be probed for dimensions."""


class ManifestError(BankAuditError):
    """Base for manifest parse failures."""


class DuplicateId(ManifestError):
    def __init__(self, asset_id: str, line: int):
        super().__init__(f"duplicate asset_id {asset_id!r} at line {line}")
        self.asset_id = asset_id
        self.line = line


class MissingField(ManifestError):
    def __init__(self, field: str, line: int):
        super().__init__(f"missing required field {field!r} at line {line}")
        self.field = field
        self.line = line


# --- geometry -------------------------------------------------------------

class EmptyMesh(BankAuditError):
    """Operation requires at least one (referenced) vertex."""


class NotWatertight(BankAuditError):
    """Volume/centroid requested for a mesh that is not a closed surface."""


class DegenerateInput(BankAuditError):
    """Convex hull input is collinear/coplanar or has fewer than 4 points."""


class NonConvexHull(BankAuditError):
    """A mesh passed as a hull failed the half-space orientation test."""


# --- intervals / judge ----------------------------------------------------

class IntervalError(BankAuditError):
    """Base for plausible-interval construction failures."""


class EmptyRuns(IntervalError):
    """No run estimates supplied."""


class NonPositiveEstimate(IntervalError):
    def __init__(self, value):
        super().__init__(f"judge estimate must be a positive integer, got {value!r}")
        self.value = value


class JudgeError(BankAuditError):
    """Base for LLM-as-judge client failures."""


class NoInteger(JudgeError):
    """Judge reply contained no parseable integer."""


class NonPositive(JudgeError):
    """Judge reply parsed to a non-positive integer."""


class JudgeUnavailable(JudgeError):
    """Transport failed for every retry of at least one run."""


class MalformedReply(JudgeError):
    """Every retry of at least one run returned an unparseable reply."""


# --- scale / stats --------------------------------------------------------

class EmptyCategory(BankAuditError):
    """Category statistics requested over an empty measurement list."""


class LengthMismatch(BankAuditError):
    def __init__(self, n_a: int, n_b: int):
        super().__init__(f"rank vectors differ in length: {n_a} vs {n_b}")


# --- anchors ---------------------------------------------------------------

class ClassifierUnavailable(BankAuditError):
    """No front-facing classifier configured, or it failed permanently."""


# --- crossmodal -----------------------------------------------------------

class EmbeddingError(BankAuditError):
    """Base for embedding-table failures."""


class BadHeader(EmbeddingError):
    """Embedding file magic/version/row framing is wrong."""


class DimMismatch(EmbeddingError):
    def __init__(self, expected: int, found: int, row: int):
        super().__init__(f"row {row}: expected dim {expected}, found {found}")
        self.expected = expected
        self.found = found
        self.row = row


class DuplicateRow(EmbeddingError):
    def __init__(self, asset_id: str, modality: str):
        super().__init__(f"duplicate embedding row ({asset_id!r}, {modality})")


class ZeroNorm(EmbeddingError):
    """Vector norm below 1e-12 where a direction is required."""


class NoOverlap(EmbeddingError):
    """No asset has both modalities of the requested coherence pair."""


class MissingTarget(EmbeddingError):
    def __init__(self, query_id: str, target: str):
        super().__init__(f"query {query_id!r}: target {target!r} not in gallery")
        self.query_id = query_id
        self.target = target


# --- report / orchestration -----------------------------------------------

class EmptyDataset(BankAuditError):
    """Audit or text statistics requested over zero usable inputs."""


class MissingInterval(BankAuditError):
    def __init__(self, category: str):
        super().__init__(
            f"no plausible interval for category {category!r} "
            "(pass --allow-missing-intervals to skip scale scoring for it)"
        )
        self.category = category


class IoFailure(BankAuditError):
    """Report emission could not write an output file."""
