"""Fairness metrics over paired score sets and WMT-style meta-evaluation
statistics over system x segment grids.

All inputs are expected on the canonical scale; the ratio metrics are
scale-free under shared multiplicative rescaling and the accuracies
under any strictly increasing monotone transform.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from itertools import combinations
from typing import Mapping, Sequence

from .errors import UndefinedMetricError


class PairRoles(Enum):
    """Role pairing per evaluation setting: (score_a role, score_b role)."""

    FEMININE_MASCULINE = ("feminine", "masculine")
    NEUTRAL_GENDERED = ("neutral", "gendered")
    CORRECT_INCORRECT = ("correct", "incorrect")

    @property
    def role_a(self) -> str:
        return self.value[0]

    @property
    def role_b(self) -> str:
        return self.value[1]


@dataclass(frozen=True)
class PairRecord:
    id: str
    score_a: float
    score_b: float


@dataclass(frozen=True)
class PairedScores:
    roles: PairRoles
    records: tuple[PairRecord, ...]

    @classmethod
    def from_mappings(
        cls, roles: PairRoles, a: Mapping[str, float], b: Mapping[str, float]
    ) -> "PairedScores":
        if set(a) != set(b):
            raise UndefinedMetricError("paired score maps must cover the same ids")
        return cls(roles, tuple(PairRecord(i, float(a[i]), float(b[i])) for i in a))


@dataclass(frozen=True)
class RatioSummary:
    mean: float
    std: float
    per_sample: tuple[tuple[str, float], ...]
    excluded: tuple[str, ...] = ()

    @property
    def excluded_count(self) -> int:
        return len(self.excluded)


def _population_std(values: Sequence[float], mean: float) -> float:
    if not values:
        return 0.0
    return math.sqrt(sum((v - mean) ** 2 for v in values) / len(values))


def _score_ratio(pairs: PairedScores, expected: PairRoles, what: str) -> RatioSummary:
    if pairs.roles is not expected:
        raise ValueError(f"{what} expects {expected.value} pairs, got {pairs.roles.value}")
    per_sample: list[tuple[str, float]] = []
    excluded: list[str] = []
    for record in pairs.records:
        if record.score_b == 0:
            excluded.append(record.id)
            continue
        per_sample.append((record.id, record.score_a / record.score_b))
    if not per_sample:
        raise UndefinedMetricError(f"{what} undefined: no usable pairs")
    values = [r for _, r in per_sample]
    mean = sum(values) / len(values)
    return RatioSummary(mean, _population_std(values, mean), tuple(per_sample), tuple(excluded))


def ratio_fm(pairs: PairedScores) -> RatioSummary:
    """Feminine-to-masculine score ratio; 1.0 means no gender preference.

    Zero masculine scores are excluded and reported, never divided by.
    Std is the population (N-denominator) standard deviation.
    """
    return _score_ratio(pairs, PairRoles.FEMININE_MASCULINE, "feminine/masculine ratio")


def ratio_neutral(pairs: PairedScores) -> RatioSummary:
    """Neutral-to-gendered score ratio; values above 1 prefer neutrality."""
    return _score_ratio(pairs, PairRoles.NEUTRAL_GENDERED, "neutral/gendered ratio")


def accuracy_explicit(pairs: PairedScores) -> float:
    """Fraction of samples where the gender-correct translation strictly
    outscores the incorrect one; ties count as wrong."""
    if pairs.roles is not PairRoles.CORRECT_INCORRECT:
        raise ValueError(f"explicit accuracy expects correct/incorrect pairs, got {pairs.roles.value}")
    if not pairs.records:
        raise UndefinedMetricError("explicit accuracy undefined on an empty pair list")
    wins = sum(1 for r in pairs.records if r.score_a > r.score_b)
    return wins / len(pairs.records)


def pearson(xs: Sequence[float], ys: Sequence[float]) -> float:
    """Sample Pearson correlation coefficient."""
    if len(xs) != len(ys):
        raise ValueError("pearson requires equal-length sequences")
    n = len(xs)
    if n < 2:
        raise UndefinedMetricError("pearson undefined for fewer than 2 points")
    mean_x = sum(xs) / n
    mean_y = sum(ys) / n
    dx = [x - mean_x for x in xs]
    dy = [y - mean_y for y in ys]
    var_x = sum(d * d for d in dx)
    var_y = sum(d * d for d in dy)
    if var_x == 0.0 or var_y == 0.0:
        raise UndefinedMetricError("pearson undefined when either input has zero variance")
    r = sum(a * b for a, b in zip(dx, dy)) / math.sqrt(var_x * var_y)
    return min(1.0, max(-1.0, r))


@dataclass(frozen=True)
class MetaEvalInput:
    """Aligned system x segment grids of human and metric scores."""

    systems: tuple[str, ...]
    human: tuple[tuple[float, ...], ...]
    metric: tuple[tuple[float, ...], ...]

    def __post_init__(self):
        n = len(self.systems)
        if len(self.human) != n or len(self.metric) != n:
            raise ValueError("human/metric grids must have one row per system")
        if n and len({len(row) for row in self.human} | {len(row) for row in self.metric}) != 1:
            raise ValueError("all grid rows must cover the same segments")

    @property
    def num_segments(self) -> int:
        return len(self.human[0]) if self.human else 0

    @classmethod
    def from_grids(
        cls,
        human: Mapping[str, Sequence[float]],
        metric: Mapping[str, Sequence[float]],
    ) -> "MetaEvalInput":
        if set(human) != set(metric):
            raise UndefinedMetricError("human and metric grids must cover the same systems")
        systems = tuple(sorted(human))
        return cls(
            systems=systems,
            human=tuple(tuple(float(v) for v in human[s]) for s in systems),
            metric=tuple(tuple(float(v) for v in metric[s]) for s in systems),
        )


def _system_means(rows: Sequence[Sequence[float]]) -> list[float]:
    return [sum(row) / len(row) for row in rows]


def system_pairwise_accuracy(meta: MetaEvalInput) -> float:
    """Fraction of human-distinguishable system pairs ranked the same way
    by the metric (system score = mean segment score); human-tied pairs
    are excluded from the denominator."""
    if len(meta.systems) < 2:
        raise UndefinedMetricError("system accuracy needs at least 2 systems")
    human = _system_means(meta.human)
    metric = _system_means(meta.metric)
    comparable = 0
    agree = 0
    for i, j in combinations(range(len(meta.systems)), 2):
        human_delta = human[i] - human[j]
        if human_delta == 0.0:
            continue
        comparable += 1
        metric_delta = metric[i] - metric[j]
        if metric_delta != 0.0 and (metric_delta > 0) == (human_delta > 0):
            agree += 1
    if comparable < 2:
        raise UndefinedMetricError(
            f"system accuracy undefined with {comparable} comparable pair(s)"
        )
    return agree / comparable


def _segment_pair_deltas(meta: MetaEvalInput) -> list[tuple[float, float]]:
    deltas: list[tuple[float, float]] = []
    for seg in range(meta.num_segments):
        for i, j in combinations(range(len(meta.systems)), 2):
            deltas.append(
                (meta.human[i][seg] - meta.human[j][seg], meta.metric[i][seg] - meta.metric[j][seg])
            )
    return deltas


def acc_t_at_epsilon(meta: MetaEvalInput, epsilon: float) -> float:
    """Tie-aware pairwise segment accuracy at a fixed tie threshold."""
    deltas = _segment_pair_deltas(meta)
    if not deltas:
        raise UndefinedMetricError("acc-t undefined with no segment pairs")
    correct = 0
    for human_delta, metric_delta in deltas:
        metric_tie = abs(metric_delta) <= epsilon
        if human_delta == 0.0:
            if metric_tie:
                correct += 1
        elif not metric_tie and (metric_delta > 0) == (human_delta > 0):
            correct += 1
    return correct / len(deltas)


def segment_acc_t(meta: MetaEvalInput) -> tuple[float, float]:
    """Segment-level pairwise accuracy with tie calibration.

    The tie threshold is grid-searched over 0 plus every distinct
    absolute metric delta, maximizing accuracy; the smallest maximizing
    threshold is returned alongside the accuracy.
    """
    deltas = _segment_pair_deltas(meta)
    if not deltas:
        raise UndefinedMetricError("acc-t undefined with no segment pairs")
    grid = sorted({0.0} | {abs(m) for _, m in deltas})
    best_acc, best_eps = -1.0, 0.0
    for eps in grid:
        acc = acc_t_at_epsilon(meta, eps)
        if acc > best_acc:
            best_acc, best_eps = acc, eps
    return best_acc, best_eps


CUE_CLASS_LABELS = ("Gender Ambiguous", "Gender Explicit", "Both", "None")


@dataclass(frozen=True)
class CueBreakdownRow:
    cue_class: str
    count: int
    proportion_pct: float
    metric: float | None


def classify_cue_kinds(has_ambiguous: bool, has_explicit: bool) -> str:
    if has_ambiguous and has_explicit:
        return "Both"
    if has_ambiguous:
        return "Gender Ambiguous"
    if has_explicit:
        return "Gender Explicit"
    return "None"


def per_cue_breakdown(
    cue_classes: Mapping[str, str], pairs: PairedScores
) -> list[CueBreakdownRow]:
    """Count / proportion / metric per detected-cue class.

    ``cue_classes`` maps sample id to one of :data:`CUE_CLASS_LABELS`
    (build it from cue reports via :func:`classify_cue_kinds`). The
    metric is the setting's own: mean ratio for paired-ratio settings,
    strict-win accuracy for correct/incorrect pairs.
    """
    missing = [r.id for r in pairs.records if r.id not in cue_classes]
    if missing:
        raise UndefinedMetricError(f"no cue class for sample ids: {sorted(missing)[:5]}")
    grouped: dict[str, list[PairRecord]] = {label: [] for label in CUE_CLASS_LABELS}
    for record in pairs.records:
        grouped[cue_classes[record.id]].append(record)
    total = len(pairs.records)
    rows: list[CueBreakdownRow] = []
    for label in CUE_CLASS_LABELS:
        records = grouped[label]
        metric: float | None = None
        if records:
            subset = PairedScores(pairs.roles, tuple(records))
            try:
                if pairs.roles is PairRoles.CORRECT_INCORRECT:
                    metric = accuracy_explicit(subset)
                else:
                    metric = _score_ratio(subset, pairs.roles, "ratio").mean
            except UndefinedMetricError:
                metric = None
        rows.append(
            CueBreakdownRow(
                cue_class=label,
                count=len(records),
                proportion_pct=(100.0 * len(records) / total) if total else 0.0,
                metric=metric,
            )
        )
    return rows
