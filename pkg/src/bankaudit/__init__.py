"""bankaudit: intrinsic quality auditing for 3D asset banks.

Audits GLB asset banks for scale plausibility against judged size
intervals, geometric health (watertightness, manifoldness, degeneracy),
anchor placement, convex hull fidelity, description-text statistics, and
cross-modal embedding coherence, then rolls everything into one dashboard.
"""

from ._version import __version__
from .anchor_metrics import (
    AnchorReport,
    ForwardAxisResult,
    anchor_error,
    canonical_anchor,
    forward_axis_audit,
    robust_bbox,
)
from .crossmodal import (
    EmbeddingTable,
    RetrievalResult,
    coherence_stats,
    cosine,
    load_embeddings,
    pool_views,
    read_embeddings,
    retrieval,
    write_embeddings,
)
from .errors import BankAuditError
from .geometry import (
    Aabb,
    HealthFlags,
    HullReport,
    bbox,
    convex_hull,
    health,
    hull_report,
    mesh_volume,
)
from .ingest import (
    GlbContainer,
    ManifestEntry,
    MaterialProbe,
    MeshGeometry,
    extract_geometry,
    load_glb,
    load_manifest,
    parse_glb,
)
from .intervals import (
    JudgeConfig,
    PlausibleInterval,
    build_prompt,
    bundled_intervals,
    derive_interval,
    interval_from_runs,
    load_intervals,
    parse_judge_reply,
    save_intervals,
)
from .report_cli import (
    AuditConfig,
    AuditRecord,
    AuditResult,
    Dashboard,
    curation_gates,
    emit_report,
    run_audit,
)
from .scale_metrics import (
    AssetMeasurement,
    CategoryScaleStats,
    SensitivityReport,
    boundary_distance,
    category_stats,
    kendall_tau,
    scale_gate,
    sensitivity_report,
    sps,
)
from .text_metrics import (
    KeywordBanks,
    TextStats,
    TokenizerModel,
    concept_density,
    dataset_text_stats,
    load_tokenizer,
    meaningful_tokens,
    tokenize,
)

__all__ = [
    "__version__",
    "BankAuditError",
    # ingest
    "GlbContainer", "MeshGeometry", "MaterialProbe", "ManifestEntry",
    "parse_glb", "extract_geometry", "load_glb", "load_manifest",
    # geometry
    "Aabb", "HealthFlags", "HullReport",
    "bbox", "health", "mesh_volume", "convex_hull", "hull_report",
    # intervals
    "PlausibleInterval", "JudgeConfig",
    "interval_from_runs", "build_prompt", "parse_judge_reply",
    "derive_interval", "save_intervals", "load_intervals", "bundled_intervals",
    # scale
    "AssetMeasurement", "CategoryScaleStats", "SensitivityReport",
    "boundary_distance", "sps", "scale_gate", "category_stats",
    "kendall_tau", "sensitivity_report",
    # anchor
    "AnchorReport", "ForwardAxisResult",
    "canonical_anchor", "anchor_error", "robust_bbox", "forward_axis_audit",
    # text
    "TokenizerModel", "KeywordBanks", "TextStats",
    "tokenize", "meaningful_tokens", "concept_density", "dataset_text_stats",
    "load_tokenizer",
    # crossmodal
    "EmbeddingTable", "RetrievalResult",
    "read_embeddings", "write_embeddings", "load_embeddings",
    "pool_views", "cosine", "coherence_stats", "retrieval",
    # audit
    "AuditConfig", "AuditRecord", "AuditResult", "Dashboard",
    "run_audit", "curation_gates", "emit_report",
]
