"""Probes, translation reports, slot embeddings and image grids."""

from slotswap.evaluation.probes import (
    PROBE_GATE,
    PROBE_KINDS,
    LearnedProbe,
    OracleProbe,
    ProbeSet,
    probe_features,
    train_probes,
)
from slotswap.evaluation.report import (
    EvalReport,
    EvalRow,
    MultiplexRow,
    evaluate_model,
    evaluate_multiplex,
    evaluate_translation,
)
from slotswap.evaluation.embeddings import (
    PROJECTIONS,
    EmbeddingTable,
    embed_attribute,
    export_embeddings,
    pooled_slots,
    project,
    separation_score,
    write_embeddings,
)
from slotswap.evaluation.grid import ROLE_COLORS, default_roles, render_grid
from slotswap.evaluation.exceptions import (
    EvaluationError,
    EvaluationInputError,
    EvaluationVoidError,
)

__all__ = [
    "PROBE_GATE",
    "PROBE_KINDS",
    "LearnedProbe",
    "OracleProbe",
    "ProbeSet",
    "probe_features",
    "train_probes",
    "EvalReport",
    "EvalRow",
    "MultiplexRow",
    "evaluate_model",
    "evaluate_multiplex",
    "evaluate_translation",
    "PROJECTIONS",
    "EmbeddingTable",
    "embed_attribute",
    "export_embeddings",
    "pooled_slots",
    "project",
    "separation_score",
    "write_embeddings",
    "ROLE_COLORS",
    "default_roles",
    "render_grid",
    "EvaluationError",
    "EvaluationInputError",
    "EvaluationVoidError",
]
