"""Shared test doubles and corpus builders."""

from __future__ import annotations

import json
from typing import Callable, Sequence

from fairgate.agents import (
    CannedTransport,
    ChatClient,
    ChatRequest,
    LlmAgents,
    ResponseCache,
    UsageLedger,
    render_prompt,
    request_key,
)
from fairgate.agents.ops import UqeAssessment, Variant, VariantOrigin
from fairgate.corpus import Corpus, CorpusSample, Setting
from fairgate.taxonomy import (
    CanonicalScore,
    CueKind,
    CueReport,
    GenderCue,
    GenderLabel,
)


def cue(kind: CueKind = CueKind.AMBIGUOUS, source="spanA", target="spanB") -> GenderCue:
    return GenderCue(source, target, kind)


def amb_report() -> CueReport:
    return CueReport((cue(CueKind.AMBIGUOUS),))


def exp_report() -> CueReport:
    return CueReport((cue(CueKind.EXPLICIT),))


def both_report() -> CueReport:
    return CueReport((cue(CueKind.AMBIGUOUS), cue(CueKind.EXPLICIT)))


class FakeAgents:
    """Programmable agent suite that records every invocation."""

    def __init__(
        self,
        cue_fn: Callable | None = None,
        amb_fn: Callable | None = None,
        exp_fn: Callable | None = None,
        uqe_fn: Callable | None = None,
    ):
        self.cue_fn = cue_fn or (lambda s, t: CueReport())
        self.amb_fn = amb_fn or (lambda s, t, cues: [])
        self.exp_fn = exp_fn or (lambda s, t, cues: (True, [], None))
        self.uqe_fn = uqe_fn or (lambda s, t, r, v: UqeAssessment(CanonicalScore(0.95)))
        self.invocations: list[tuple] = []

    def detect_cues(self, source, target):
        self.invocations.append(("cue", source, target))
        return self.cue_fn(source, target)

    def generate_ambiguous_variants(self, source, target, cues):
        self.invocations.append(("amb", source, target))
        return self.amb_fn(source, target, cues)

    def generate_explicit_variants(self, source, target, cues):
        self.invocations.append(("exp", source, target))
        return self.exp_fn(source, target, cues)

    def score_unbiased(self, source, target, report, variants):
        self.invocations.append(("uqe", source, target))
        return self.uqe_fn(source, target, report, variants)

    def calls_for(self, kind: str) -> int:
        return sum(1 for entry in self.invocations if entry[0] == kind)


def make_scripted_agents(
    responses=None,
    defaults=None,
    *,
    cache_dir=None,
    ledger: UsageLedger | None = None,
    model: str = "test-model",
    json_reasks: int = 2,
    batch_cues: bool = True,
):
    """LlmAgents over a CannedTransport; returns (agents, transport, ledger)."""
    transport = CannedTransport(responses, defaults)
    ledger = ledger or UsageLedger()
    cache = ResponseCache(cache_dir) if cache_dir else None
    client = ChatClient(transport, cache=cache, ledger=ledger)
    agents = LlmAgents(
        client, model, json_reasks=json_reasks, batch_cues=batch_cues
    )
    return agents, transport, ledger


def scripted_key(kind, inputs, model="test-model", max_output_tokens=1024) -> str:
    """Request key for a scripted response targeting one exact prompt."""
    system, user = render_prompt(kind, inputs)
    return request_key(
        ChatRequest(model=model, system=system, user=user, max_output_tokens=max_output_tokens)
    )


def ambiguous_variant(text, gender=GenderLabel.FEMININE) -> Variant:
    return Variant(text, gender, VariantOrigin.AMBIGUOUS)


def explicit_variant(text, gender=GenderLabel.MASCULINE) -> Variant:
    return Variant(text, gender, VariantOrigin.EXPLICIT)


# -- synthetic corpora ---------------------------------------------------------


def skewed_pair_corpus(
    n: int = 200, delta: float = 0.02, lo: float = 0.7, hi: float = 0.95
) -> tuple[Corpus, dict[tuple[str, str], float]]:
    """Feminine/masculine corpus with a uniform masculine score skew.

    Base scores spread evenly over [lo, hi]; the masculine rendering of
    pair i scores base_i + delta, the feminine one base_i.
    """
    samples = []
    table: dict[tuple[str, str], float] = {}
    for i in range(n):
        base = lo + (hi - lo) * (i / (n - 1) if n > 1 else 0.0)
        source = f"source sentence {i}"
        feminine = f"target {i} ella"
        masculine = f"target {i} el"
        samples.append(
            CorpusSample(
                id=f"s{i:04d}",
                setting=Setting.AMB_FM,
                source=source,
                targets={"feminine": feminine, "masculine": masculine},
                language_pair="en-es",
            )
        )
        table[(source, feminine)] = base
        table[(source, masculine)] = base + delta
    return Corpus(tuple(samples), Setting.AMB_FM), table


def counterpart_agents(uqe_score: float = 0.95) -> FakeAgents:
    """Fake suite for the skewed corpus: one ambiguous cue per sample, the
    opposite-gender counterpart as the single variant, a flat uqe score."""

    def detect(source, target):
        return amb_report()

    def generate(source, target, cues):
        if target.endswith("ella"):
            return [Variant(target[: -len("ella")] + "el", GenderLabel.MASCULINE, VariantOrigin.AMBIGUOUS)]
        return [Variant(target[: -len("el")] + "ella", GenderLabel.FEMININE, VariantOrigin.AMBIGUOUS)]

    def uqe(source, target, report, variants):
        return UqeAssessment(CanonicalScore(uqe_score))

    return FakeAgents(cue_fn=detect, amb_fn=generate, uqe_fn=uqe)


def write_jsonl(path, rows: Sequence[dict]) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        for row in rows:
            handle.write(json.dumps(row, ensure_ascii=False) + "\n")
