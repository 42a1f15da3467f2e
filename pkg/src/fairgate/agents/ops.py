"""The four LLM agent operations: cue detection, ambiguous/explicit
variant generation, and MQM-style unbiased scoring.

All operations render a prompt, call the chat client, and parse JSON.
Malformed JSON is re-asked a bounded number of times (bypassing the
cache read); schema-invalid JSON fails immediately. Individual bad
entries inside otherwise valid output are dropped with a warning rather
than corrupting the bias math downstream.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Protocol, Sequence

from ..errors import (
    AgentError,
    CueDetectionError,
    UqeScoringError,
    VariantGenerationError,
)
from ..taxonomy import (
    CanonicalScore,
    CueKind,
    CueReport,
    GenderCue,
    GenderLabel,
    MQM100_SCALE,
    classify_category,
    load_taxonomy,
    category_index,
    normalize_score,
    parse_gender_label,
    partition_cues,
)
from .prompts import AgentKind, render_prompt
from .transport import ChatClient, ChatRequest

log = logging.getLogger(__name__)


class VariantOrigin(str, Enum):
    AMBIGUOUS = "ambiguous"
    EXPLICIT = "explicit"


class Alignment(str, Enum):
    """Whether the original target satisfies the source's explicit gender
    constraint; NOT_APPLICABLE when there are no explicit cues."""

    ALIGNED = "aligned"
    MISALIGNED = "misaligned"
    NOT_APPLICABLE = "not_applicable"

    @classmethod
    def from_bool(cls, aligned: bool) -> "Alignment":
        return cls.ALIGNED if aligned else cls.MISALIGNED


@dataclass(frozen=True)
class Variant:
    """A gender-flipped rendering of the original target sentence."""

    text: str
    gender: GenderLabel
    origin: VariantOrigin

    def __post_init__(self):
        if not self.text:
            raise ValueError("variant text must be non-empty")


def _dedup(variants: Iterable[Variant]) -> tuple[Variant, ...]:
    seen: set[tuple[str, GenderLabel]] = set()
    out: list[Variant] = []
    for v in variants:
        key = (v.text, v.gender)
        if key in seen:
            continue
        seen.add(key)
        out.append(v)
    return tuple(out)


@dataclass(frozen=True)
class VariantSet:
    """All generated variants for one sample plus the alignment signal."""

    ambiguous: tuple[Variant, ...] = ()
    explicit: tuple[Variant, ...] = ()
    alignment: Alignment = Alignment.NOT_APPLICABLE
    rationale: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "ambiguous", _dedup(self.ambiguous))
        object.__setattr__(self, "explicit", _dedup(self.explicit))

    @property
    def all(self) -> tuple[Variant, ...]:
        return self.ambiguous + self.explicit

    @classmethod
    def empty(cls) -> "VariantSet":
        return cls()


@dataclass(frozen=True)
class UqeAssessment:
    """Canonical debiased score plus the model's stated reasoning."""

    score: CanonicalScore
    rationale: str | None = None


class AgentSuite(Protocol):
    """What the pipeline needs from the agent layer; ``LlmAgents`` is the
    production implementation, tests may substitute plain fakes."""

    def detect_cues(self, source: str, target: str) -> CueReport: ...

    def generate_ambiguous_variants(
        self, source: str, target: str, cues: Sequence[GenderCue]
    ) -> list[Variant]: ...

    def generate_explicit_variants(
        self, source: str, target: str, cues: Sequence[GenderCue]
    ) -> tuple[bool, list[Variant], str | None]: ...

    def score_unbiased(
        self, source: str, target: str, report: CueReport, variants: VariantSet
    ) -> UqeAssessment: ...


def cue_pairs_json(cues: Sequence[GenderCue]) -> str:
    return json.dumps(
        [{"source_token": c.source_span, "target_token": c.target_span} for c in cues],
        ensure_ascii=False,
    )


class LlmAgents:
    """LLM-backed implementation of the agent suite."""

    def __init__(
        self,
        client: ChatClient,
        model: str,
        *,
        max_output_tokens: int = 1024,
        json_reasks: int = 2,
        batch_cues: bool = True,
        taxonomy=None,
    ):
        self.client = client
        self.model = model
        self.max_output_tokens = max_output_tokens
        self.json_reasks = json_reasks
        self.batch_cues = batch_cues
        self._categories = category_index(taxonomy if taxonomy is not None else load_taxonomy())

    def _ask_json(self, kind: AgentKind, inputs: dict, error_cls: type[AgentError]):
        system, user = render_prompt(kind, inputs)
        request = ChatRequest(
            model=self.model,
            system=system,
            user=user,
            max_output_tokens=self.max_output_tokens,
        )
        attempts = 1 + self.json_reasks
        last_text = ""
        for attempt in range(attempts):
            response = self.client.complete(request, tag=kind.value, refresh=attempt > 0)
            if response.parsed is not None:
                return response.parsed
            last_text = response.raw_text
            log.warning("agent %s produced non-JSON output (attempt %d)", kind.value, attempt + 1)
        raise error_cls(
            f"agent {kind.value} returned unparseable output after {attempts} attempts: "
            f"{last_text[:200]!r}"
        )

    # -- Stage 1 -------------------------------------------------------

    def detect_cues(self, source: str, target: str) -> CueReport:
        if not source or not target:
            raise ValueError("source and target must be non-empty")
        parsed = self._ask_json(
            AgentKind.CUE, {"source": source, "target": target}, CueDetectionError
        )
        if not isinstance(parsed, dict):
            raise CueDetectionError(f"cue detector must return a JSON object, got {type(parsed).__name__}")
        cues: list[GenderCue] = []
        for key, kind in (("gender_ambiguous", CueKind.AMBIGUOUS), ("gender_explicit", CueKind.EXPLICIT)):
            entries = parsed.get(key, [])
            if not isinstance(entries, list):
                raise CueDetectionError(f"cue detector field {key!r} must be a list")
            for entry in entries:
                cue = self._parse_cue_entry(entry, kind)
                if cue is not None:
                    cues.append(cue)
        return CueReport(tuple(cues))

    def _parse_cue_entry(self, entry, kind: CueKind) -> GenderCue | None:
        if not isinstance(entry, dict):
            log.warning("dropping non-object cue entry: %r", entry)
            return None
        source_span = entry.get("source_token")
        target_span = entry.get("target_token")
        source_span = None if source_span is None else str(source_span)
        target_span = None if target_span is None else str(target_span)
        if source_span is None and target_span is None:
            log.warning("dropping cue with null source_token and target_token")
            return None
        category = None
        raw_category = entry.get("category")
        if raw_category is not None:
            try:
                code = str(raw_category).strip().upper()
                if classify_category(code) is kind:
                    category = self._categories.get(code)
                else:
                    log.warning("cue category %s conflicts with %s list; keeping list kind", code, kind.value)
            except Exception:
                log.warning("ignoring unknown cue category %r", raw_category)
        return GenderCue(source_span, target_span, kind, category)

    # -- Stage 2 -------------------------------------------------------

    def _cue_chunks(self, cues: Sequence[GenderCue]) -> list[Sequence[GenderCue]]:
        return [cues] if self.batch_cues else [[c] for c in cues]

    def generate_ambiguous_variants(
        self, source: str, target: str, cues: Sequence[GenderCue]
    ) -> list[Variant]:
        if not cues:
            raise ValueError("generate_ambiguous_variants requires at least one cue")
        variants: list[Variant] = []
        for chunk in self._cue_chunks(cues):
            parsed = self._ask_json(
                AgentKind.AMB,
                {"source": source, "target": target, "ambiguous_pairs_json": cue_pairs_json(chunk)},
                VariantGenerationError,
            )
            if not isinstance(parsed, list):
                raise VariantGenerationError(
                    f"ambiguous generator must return a JSON list, got {type(parsed).__name__}"
                )
            variants.extend(self._parse_variant_entries(parsed, target, VariantOrigin.AMBIGUOUS))
        return list(_dedup(variants))

    def generate_explicit_variants(
        self, source: str, target: str, cues: Sequence[GenderCue]
    ) -> tuple[bool, list[Variant], str | None]:
        if not cues:
            raise ValueError("generate_explicit_variants requires at least one cue")
        flags: list[bool] = []
        rationales: list[str] = []
        variants: list[Variant] = []
        for chunk in self._cue_chunks(cues):
            parsed = self._ask_json(
                AgentKind.EXP,
                {"source": source, "target": target, "explicit_pairs_json": cue_pairs_json(chunk)},
                VariantGenerationError,
            )
            if not isinstance(parsed, list):
                raise VariantGenerationError(
                    f"explicit generator must return a JSON list, got {type(parsed).__name__}"
                )
            for entry in parsed:
                if not isinstance(entry, dict) or not isinstance(entry.get("error"), bool):
                    raise VariantGenerationError(
                        f"explicit generator entries need a boolean 'error' flag: {entry!r}"
                    )
                flags.append(not entry["error"])
                rationale = entry.get("rationale")
                if rationale:
                    rationales.append(str(rationale))
                transformed = entry.get("transformed", [])
                if not isinstance(transformed, list):
                    raise VariantGenerationError("explicit generator 'transformed' must be a list")
                variants.extend(
                    self._parse_variant_entries(transformed, target, VariantOrigin.EXPLICIT)
                )
        # Conjunction over per-cue outcomes; vacuously aligned when the
        # agent could not substitute anything.
        aligned = all(flags)
        return aligned, list(_dedup(variants)), "\n".join(rationales) or None

    def _parse_variant_entries(
        self, entries: list, original_target: str, origin: VariantOrigin
    ) -> list[Variant]:
        out: list[Variant] = []
        for entry in entries:
            if not isinstance(entry, dict):
                log.warning("dropping non-object variant entry: %r", entry)
                continue
            text = entry.get("transformed_text")
            if not isinstance(text, str) or not text:
                log.warning("dropping variant without transformed_text: %r", entry)
                continue
            label = parse_gender_label(entry.get("gender_version", ""))
            if label is None:
                log.warning("dropping variant with unknown gender_version: %r", entry.get("gender_version"))
                continue
            if text == original_target:
                log.warning("dropping variant identical to the original target")
                continue
            out.append(Variant(text, label, origin))
        return out

    # -- Stage 3 (reasoning stream) -------------------------------------

    def score_unbiased(
        self, source: str, target: str, report: CueReport, variants: VariantSet
    ) -> UqeAssessment:
        ambiguous_cues, explicit_cues = partition_cues(report)
        if variants.alignment is Alignment.NOT_APPLICABLE:
            exp_analysis = "null"
        else:
            exp_analysis = json.dumps(
                {
                    "error": variants.alignment is Alignment.MISALIGNED,
                    "rationale": variants.rationale or "",
                    "transformed": [
                        {"transformed_text": v.text, "gender_version": v.gender.value}
                        for v in variants.explicit
                    ],
                },
                ensure_ascii=False,
            )
        inputs = {
            "source": source,
            "target": target,
            "ambiguous_pairs_json": cue_pairs_json(ambiguous_cues),
            "explicit_pairs_json": cue_pairs_json(explicit_cues),
            "amb_alternatives_text": json.dumps(
                [
                    {"transformed_text": v.text, "gender_version": v.gender.value}
                    for v in variants.ambiguous
                ],
                ensure_ascii=False,
            ),
            "exp_analysis_text": exp_analysis,
        }
        parsed = self._ask_json(AgentKind.UQE, inputs, UqeScoringError)
        if not isinstance(parsed, dict):
            raise UqeScoringError(f"scorer must return a JSON object, got {type(parsed).__name__}")
        raw = parsed.get("qe_score")
        if isinstance(raw, bool) or not isinstance(raw, (int, float)):
            raise UqeScoringError(f"qe_score missing or non-numeric: {raw!r}")
        if not 0 <= raw <= 100:
            raise UqeScoringError(f"qe_score must be between 0 and 100, got {raw!r}")
        rationale = parsed.get("rationale")
        rationale = str(rationale) if rationale is not None else None
        return UqeAssessment(normalize_score(float(raw), MQM100_SCALE), rationale)
