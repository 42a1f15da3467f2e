"""Shared domain types: the C1-C12 gender-cue taxonomy, gender labels,
and canonical score-scale normalization.

Everything here is immutable after construction and safe to share across
concurrent pipeline tasks.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from enum import Enum
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence

from .errors import ScaleRangeError, TaxonomyError, UnknownCategoryError

# Raw scores within this absolute distance of a scale bound are clamped
# into range; anything further out is a misconfigured scale.
CLAMP_TOLERANCE = 1e-9

_CATEGORY_RE = re.compile(r"^C([1-9]|1[0-2])$")


class CueKind(str, Enum):
    """Whether a cue fixes gender (explicit) or leaves it open (ambiguous)."""

    EXPLICIT = "explicit"
    AMBIGUOUS = "ambiguous"


class GenderLabel(str, Enum):
    FEMININE = "Feminine"
    MASCULINE = "Masculine"
    NEUTRAL = "Neutral"


def parse_gender_label(text: str) -> GenderLabel | None:
    """Case-insensitive match against the closed label set; None if unknown."""
    lowered = str(text).strip().lower()
    for label in GenderLabel:
        if label.value.lower() == lowered:
            return label
    return None


def classify_category(code: str) -> CueKind:
    """Map a category code C1..C12 (case-insensitive) to its cue kind.

    C1-C6 are explicit, C7-C12 ambiguous. Unknown codes raise
    :class:`UnknownCategoryError` carrying the offending token.
    """
    token = str(code).strip()
    match = _CATEGORY_RE.match(token.upper())
    if not match:
        raise UnknownCategoryError(token)
    return CueKind.EXPLICIT if int(match.group(1)) <= 6 else CueKind.AMBIGUOUS


@dataclass(frozen=True)
class CueCategory:
    """One row of the 12-entry cue taxonomy."""

    code: str
    kind: CueKind
    description: str
    examples: tuple[str, ...] = ()

    def __post_init__(self):
        expected = classify_category(self.code)
        if expected is not self.kind:
            raise TaxonomyError(
                f"category {self.code} declared {self.kind.value} but codes "
                f"{'C1-C6' if expected is CueKind.EXPLICIT else 'C7-C12'} are {expected.value}"
            )


@dataclass(frozen=True)
class GenderCue:
    """A detected cue pair linking a source span to its target realization.

    The detector's wire schema reports which kind a cue belongs to but not
    its fine-grained category, so ``kind`` is authoritative and ``category``
    is optional metadata that must agree with it when present.
    """

    source_span: str | None
    target_span: str | None
    kind: CueKind
    category: CueCategory | None = None

    def __post_init__(self):
        if self.source_span is None and self.target_span is None:
            raise ValueError("gender cue needs at least one of source_span/target_span")
        if self.category is not None and self.category.kind is not self.kind:
            raise ValueError(
                f"cue kind {self.kind.value} conflicts with category "
                f"{self.category.code} ({self.category.kind.value})"
            )


@dataclass(frozen=True)
class CueReport:
    """All cues detected for one (source, target) pair.

    An empty report is a valid outcome (no gender cues anywhere); parse
    failures never produce a report, they raise ``CueDetectionError``.
    """

    cues: tuple[GenderCue, ...] = ()

    @property
    def ambiguous(self) -> tuple[GenderCue, ...]:
        return tuple(c for c in self.cues if c.kind is CueKind.AMBIGUOUS)

    @property
    def explicit(self) -> tuple[GenderCue, ...]:
        return tuple(c for c in self.cues if c.kind is CueKind.EXPLICIT)

    @property
    def is_empty(self) -> bool:
        return not self.cues


def partition_cues(report: CueReport) -> tuple[list[GenderCue], list[GenderCue]]:
    """Split a report into (ambiguous, explicit) lists, preserving input order."""
    ambiguous: list[GenderCue] = []
    explicit: list[GenderCue] = []
    for cue in report.cues:
        (ambiguous if cue.kind is CueKind.AMBIGUOUS else explicit).append(cue)
    return ambiguous, explicit


class CanonicalScore(float):
    """A score on the common [0, 1] higher-is-better scale.

    All bias arithmetic happens on this scale; construct via
    :func:`normalize_score` when the raw value lives on a backend scale.
    """

    __slots__ = ()

    def __new__(cls, value: float) -> "CanonicalScore":
        v = float(value)
        if not 0.0 <= v <= 1.0:
            raise ScaleRangeError(f"canonical score must be in [0, 1], got {v!r}")
        return super().__new__(cls, v)

    def __repr__(self) -> str:
        return f"CanonicalScore({float(self)!r})"


@dataclass(frozen=True)
class ScoreScale:
    """A named raw score scale and its orientation."""

    name: str
    raw_min: float
    raw_max: float
    higher_is_better: bool = True

    def __post_init__(self):
        if not self.raw_min < self.raw_max:
            raise ValueError(f"scale {self.name!r}: raw_min must be < raw_max")

    def as_dict(self) -> dict:
        return {
            "name": self.name,
            "raw_min": self.raw_min,
            "raw_max": self.raw_max,
            "higher_is_better": self.higher_is_better,
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "ScoreScale":
        return cls(
            name=str(payload["name"]),
            raw_min=float(payload["raw_min"]),
            raw_max=float(payload["raw_max"]),
            higher_is_better=bool(payload["higher_is_better"]),
        )


# Named scales so config files stay self-describing. COMETKiwi-style
# regressors emit [0, 1] higher-is-better, MetricX-style emit 0-25 error
# scores (lower is better), MQM-style LLM judges emit 0-100.
UNIT_SCALE = ScoreScale("unit", 0.0, 1.0, True)
COMETKIWI_SCALE = ScoreScale("cometkiwi", 0.0, 1.0, True)
METRICX_SCALE = ScoreScale("metricx", 0.0, 25.0, False)
MQM100_SCALE = ScoreScale("mqm100", 0.0, 100.0, True)

SCALES: dict[str, ScoreScale] = {
    s.name: s for s in (UNIT_SCALE, COMETKIWI_SCALE, METRICX_SCALE, MQM100_SCALE)
}


def get_scale(name: str) -> ScoreScale:
    try:
        return SCALES[name]
    except KeyError:
        raise ScaleRangeError(
            f"unknown scale {name!r}; registered scales: {sorted(SCALES)}"
        ) from None


def normalize_score(raw: float, scale: ScoreScale) -> CanonicalScore:
    """Affine-map a raw backend score onto the canonical [0, 1] scale.

    Lower-is-better scales are reflected so 1 is always best. Values
    within ``CLAMP_TOLERANCE`` of the bounds are clamped; anything
    further out raises :class:`ScaleRangeError`.
    """
    value = float(raw)
    if value < scale.raw_min - CLAMP_TOLERANCE or value > scale.raw_max + CLAMP_TOLERANCE:
        raise ScaleRangeError(
            f"raw score {value!r} outside scale {scale.name!r} "
            f"[{scale.raw_min}, {scale.raw_max}]"
        )
    value = min(max(value, scale.raw_min), scale.raw_max)
    mapped = (value - scale.raw_min) / (scale.raw_max - scale.raw_min)
    if not scale.higher_is_better:
        mapped = 1.0 - mapped
    return CanonicalScore(min(max(mapped, 0.0), 1.0))


def denormalize_score(score: float, scale: ScoreScale) -> float:
    """Exact inverse of :func:`normalize_score` on the same scale."""
    value = float(score)
    if not 0.0 <= value <= 1.0:
        raise ScaleRangeError(f"canonical score must be in [0, 1], got {value!r}")
    if not scale.higher_is_better:
        value = 1.0 - value
    return scale.raw_min + value * (scale.raw_max - scale.raw_min)


def _category_from_dict(payload: dict) -> CueCategory:
    try:
        code = str(payload["code"]).strip().upper()
        kind = CueKind(str(payload["kind"]).strip().lower())
        description = str(payload["description"])
        examples = tuple(str(e) for e in payload.get("examples", []))
    except (KeyError, ValueError) as exc:
        raise TaxonomyError(f"malformed taxonomy entry: {payload!r}") from exc
    return CueCategory(code=code, kind=kind, description=description, examples=examples)


def load_taxonomy(path: str | Path | None = None) -> tuple[CueCategory, ...]:
    """Load the cue taxonomy from JSON; default is the bundled resource.

    The file must define exactly the 12 categories C1..C12, each with a
    kind that agrees with :func:`classify_category`.
    """
    if path is None:
        text = resources.files("fairgate.resources").joinpath("taxonomy.json").read_text("utf-8")
    else:
        text = Path(path).read_text("utf-8")
    try:
        payload = json.loads(text)
    except json.JSONDecodeError as exc:
        raise TaxonomyError(f"taxonomy file is not valid JSON: {exc}") from exc
    if not isinstance(payload, list):
        raise TaxonomyError("taxonomy file must be a JSON list of category objects")

    categories = tuple(_category_from_dict(entry) for entry in payload)
    codes = [c.code for c in categories]
    expected = [f"C{i}" for i in range(1, 13)]
    if sorted(codes, key=lambda c: int(c[1:])) != expected:
        raise TaxonomyError(f"taxonomy must define exactly C1..C12, got {codes}")
    return categories


def dump_taxonomy(categories: Iterable[CueCategory], path: str | Path) -> None:
    payload = [
        {
            "code": c.code,
            "kind": c.kind.value,
            "description": c.description,
            "examples": list(c.examples),
        }
        for c in categories
    ]
    Path(path).write_text(json.dumps(payload, ensure_ascii=False, indent=2) + "\n", "utf-8")


def category_index(categories: Sequence[CueCategory]) -> dict[str, CueCategory]:
    return {c.code: c for c in categories}
