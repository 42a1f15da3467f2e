"""Fairness-aware machine-translation quality estimation.

Wraps any black-box QE backbone with gender-cue detection, counterfactual
variant scoring, and a soft bias gate that blends the backbone score with
an LLM-derived debiased score in proportion to the measured bias.
"""

from .backends import (
    ConstantBackend,
    QeBackend,
    RemoteBackend,
    ScoreBundle,
    ScoreRequest,
    TableBackend,
    table_mock_scorer,
)
from .pipeline import (
    BiasBreakdown,
    FallbackReason,
    GateParams,
    Pipeline,
    RunReport,
    SampleFailure,
    SampleResult,
    aggregate,
    compute_b_amb,
    compute_b_exp,
    compute_gate,
    evaluate_corpus,
)
from .taxonomy import (
    CanonicalScore,
    CueCategory,
    CueKind,
    CueReport,
    GenderCue,
    GenderLabel,
    ScoreScale,
    classify_category,
    denormalize_score,
    get_scale,
    load_taxonomy,
    normalize_score,
    partition_cues,
)

__version__ = "0.1.0"

__all__ = [
    "BiasBreakdown",
    "CanonicalScore",
    "ConstantBackend",
    "CueCategory",
    "CueKind",
    "CueReport",
    "FallbackReason",
    "GateParams",
    "GenderCue",
    "GenderLabel",
    "Pipeline",
    "QeBackend",
    "RemoteBackend",
    "RunReport",
    "SampleFailure",
    "SampleResult",
    "ScoreBundle",
    "ScoreRequest",
    "ScoreScale",
    "TableBackend",
    "aggregate",
    "classify_category",
    "compute_b_amb",
    "compute_b_exp",
    "compute_gate",
    "denormalize_score",
    "evaluate_corpus",
    "get_scale",
    "load_taxonomy",
    "normalize_score",
    "partition_cues",
    "table_mock_scorer",
]
