"""Four-stage per-sample orchestration and corpus execution.

Stage 1 detects gender cues; when none are found the remaining LLM
stages are skipped entirely and the backbone score passes through
untouched. Otherwise variants are generated for each non-empty cue
partition, the backbone scores the original plus every variant, the
reasoning agent produces its debiased score, and the soft gate blends
the two streams in proportion to the measured bias.
"""

from __future__ import annotations

import datetime as _dt
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

from .agents.ops import AgentSuite, Alignment, VariantOrigin, VariantSet
from .backends import QeBackend, ScoreBundle, ScoreRequest
from .errors import AgentError, BackendError
from .taxonomy import CanonicalScore, CueReport, partition_cues

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1


@dataclass(frozen=True)
class GateParams:
    """Weights on the two bias terms in the soft gate."""

    alpha: float = 5.0
    beta: float = 5.0

    def __post_init__(self):
        if self.alpha < 0 or self.beta < 0:
            raise ValueError("gate weights must be non-negative")


@dataclass(frozen=True)
class BiasBreakdown:
    """Per-sample bias terms, their weighted total, and the mixing weight."""

    b_amb: float
    b_exp: float
    total: float
    weight: float

    @classmethod
    def zero(cls) -> "BiasBreakdown":
        return cls(0.0, 0.0, 0.0, 0.0)


class FallbackReason(str, Enum):
    NONE = "none"
    NO_CUES = "no_cues"
    AGENT_FAILURE = "agent_failure"


def compute_b_amb(q_orig: float, ambiguous_scores: Sequence[float]) -> float:
    """Score volatility across the original and its ambiguous-gender
    variants: range (max - min) of the pooled set. Empty variant set -> 0."""
    if not ambiguous_scores:
        return 0.0
    pooled = [float(q_orig), *map(float, ambiguous_scores)]
    return max(pooled) - min(pooled)


def compute_b_exp(
    q_orig: float, explicit_scores: Sequence[float], alignment: Alignment
) -> float:
    """Preference-violation margin for explicit cues, clamped at zero.

    When the original is aligned, bias is how far the best flipped
    variant outscores it; when misaligned, how far the original outscores
    the best (constraint-consistent) variant.
    """
    if alignment is Alignment.NOT_APPLICABLE or not explicit_scores:
        return 0.0
    best_variant = max(float(s) for s in explicit_scores)
    if alignment is Alignment.ALIGNED:
        return max(0.0, best_variant - float(q_orig))
    return max(0.0, float(q_orig) - best_variant)


def compute_gate(b_amb: float, b_exp: float, params: GateParams) -> BiasBreakdown:
    """Weighted total bias and its soft-gate weight w = B / (1 + B)."""
    if b_amb < 0 or b_exp < 0:
        raise ValueError(f"bias terms must be non-negative, got ({b_amb}, {b_exp})")
    total = params.alpha * b_amb + params.beta * b_exp
    return BiasBreakdown(b_amb=b_amb, b_exp=b_exp, total=total, weight=total / (1.0 + total))


def aggregate(q_orig: float, q_uqe: float, weight: float) -> CanonicalScore:
    """Convex blend w * q_uqe + (1 - w) * q_orig on the canonical scale."""
    if not 0.0 <= weight < 1.0:
        raise ValueError(f"gate weight must be in [0, 1), got {weight}")
    blended = weight * float(q_uqe) + (1.0 - weight) * float(q_orig)
    return CanonicalScore(min(max(blended, 0.0), 1.0))


@dataclass(frozen=True)
class SampleResult:
    sample_id: str
    cue_report: CueReport
    variants: VariantSet
    scores: ScoreBundle
    bias: BiasBreakdown
    q_final: CanonicalScore
    fallback: FallbackReason = FallbackReason.NONE
    rationale: str | None = None


@dataclass(frozen=True)
class SampleFailure:
    sample_id: str
    stage: str
    error: str


@dataclass
class Pipeline:
    backend: QeBackend
    agents: AgentSuite
    gate: GateParams = field(default_factory=GateParams)

    def evaluate_sample(
        self, sample_id: str, source: str, target: str, language_pair: str | None = None
    ) -> SampleResult:
        """Run the four stages for one (source, target) pair.

        Agent failures degrade to the backbone score with a recorded
        fallback; backend failures propagate as :class:`BackendError`.
        """
        pair = ScoreRequest(source, target, language_pair)

        try:
            report = self.agents.detect_cues(source, target)
        except AgentError as exc:
            log.warning("sample %s: cue detection failed (%s); falling back", sample_id, exc)
            return self._fallback_result(sample_id, pair, CueReport(), FallbackReason.AGENT_FAILURE)

        if report.is_empty:
            # No cues anywhere: later LLM stages are skipped entirely.
            return self._fallback_result(sample_id, pair, report, FallbackReason.NO_CUES)

        ambiguous_cues, explicit_cues = partition_cues(report)
        try:
            amb_variants = (
                self.agents.generate_ambiguous_variants(source, target, ambiguous_cues)
                if ambiguous_cues
                else []
            )
            if explicit_cues:
                aligned, exp_variants, rationale = self.agents.generate_explicit_variants(
                    source, target, explicit_cues
                )
                alignment = Alignment.from_bool(aligned)
            else:
                exp_variants, alignment, rationale = [], Alignment.NOT_APPLICABLE, None
        except AgentError as exc:
            log.warning("sample %s: variant generation failed (%s); falling back", sample_id, exc)
            return self._fallback_result(sample_id, pair, report, FallbackReason.AGENT_FAILURE)

        variants = VariantSet(
            ambiguous=tuple(amb_variants),
            explicit=tuple(exp_variants),
            alignment=alignment,
            rationale=rationale,
        )

        all_variants = variants.all
        batch = [pair] + [ScoreRequest(source, v.text, language_pair) for v in all_variants]
        scores = self.backend.score_batch(batch)
        q_orig, variant_scores = scores[0], tuple(zip(all_variants, scores[1:]))

        try:
            assessment = self.agents.score_unbiased(source, target, report, variants)
        except AgentError as exc:
            log.warning("sample %s: unbiased scoring failed (%s); falling back", sample_id, exc)
            return SampleResult(
                sample_id=sample_id,
                cue_report=report,
                variants=variants,
                scores=ScoreBundle(q_orig, variant_scores, None),
                bias=BiasBreakdown.zero(),
                q_final=q_orig,
                fallback=FallbackReason.AGENT_FAILURE,
            )

        amb_scores = [float(s) for v, s in variant_scores if v.origin is VariantOrigin.AMBIGUOUS]
        exp_scores = [float(s) for v, s in variant_scores if v.origin is VariantOrigin.EXPLICIT]
        breakdown = compute_gate(
            compute_b_amb(q_orig, amb_scores),
            compute_b_exp(q_orig, exp_scores, alignment),
            self.gate,
        )
        q_final = aggregate(q_orig, assessment.score, breakdown.weight)
        return SampleResult(
            sample_id=sample_id,
            cue_report=report,
            variants=variants,
            scores=ScoreBundle(q_orig, variant_scores, assessment.score),
            bias=breakdown,
            q_final=q_final,
            rationale=assessment.rationale,
        )

    def _fallback_result(
        self,
        sample_id: str,
        pair: ScoreRequest,
        report: CueReport,
        reason: FallbackReason,
    ) -> SampleResult:
        q_orig = self.backend.score(pair)
        return SampleResult(
            sample_id=sample_id,
            cue_report=report,
            variants=VariantSet.empty(),
            scores=ScoreBundle(q_orig, (), None),
            bias=BiasBreakdown.zero(),
            q_final=q_orig,
            fallback=reason,
        )


@dataclass
class RunReport:
    """Everything one corpus run produced, in corpus order."""

    setting: str | None
    role: str | None
    gate: GateParams
    backend: dict
    results: list  # SampleResult | SampleFailure, aligned with corpus order
    usage: dict
    config: dict = field(default_factory=dict)
    created_at: str = ""
    schema_version: int = SCHEMA_VERSION

    @property
    def ok_results(self) -> list[SampleResult]:
        return [r for r in self.results if isinstance(r, SampleResult)]

    @property
    def failures(self) -> list[SampleFailure]:
        return [r for r in self.results if isinstance(r, SampleFailure)]

    def counts(self) -> dict:
        ok = self.ok_results
        return {
            "samples": len(self.results),
            "ok": len(ok),
            "failed": len(self.failures),
            "fallback_no_cues": sum(1 for r in ok if r.fallback is FallbackReason.NO_CUES),
            "fallback_agent_failure": sum(
                1 for r in ok if r.fallback is FallbackReason.AGENT_FAILURE
            ),
        }


def evaluate_corpus(
    pipeline: Pipeline,
    samples: Sequence[tuple[str, str, str, str | None]],
    *,
    setting: str | None = None,
    role: str | None = None,
    max_concurrency: int = 4,
    usage: dict | None = None,
    config: dict | None = None,
) -> RunReport:
    """Evaluate (id, source, target, language_pair) tuples with bounded
    parallelism; report order always equals input order."""
    if max_concurrency < 1:
        raise ValueError("max_concurrency must be >= 1")

    def run_one(item):
        sample_id, source, target, language_pair = item
        try:
            return pipeline.evaluate_sample(sample_id, source, target, language_pair)
        except BackendError as exc:
            return SampleFailure(sample_id, "backend", str(exc))
        except Exception as exc:  # keep the corpus run alive
            log.exception("sample %s: unexpected failure", sample_id)
            return SampleFailure(sample_id, "internal", str(exc))

    if max_concurrency == 1 or len(samples) <= 1:
        results = [run_one(item) for item in samples]
    else:
        with ThreadPoolExecutor(max_workers=max_concurrency) as pool:
            results = list(pool.map(run_one, samples))

    return RunReport(
        setting=setting,
        role=role,
        gate=pipeline.gate,
        backend=pipeline.backend.describe(),
        results=results,
        usage=usage if usage is not None else {},
        config=config or {},
        created_at=_dt.datetime.now(_dt.timezone.utc).isoformat(),
    )
