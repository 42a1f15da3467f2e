"""Acceptance suite: one test per release criterion, each printing a
PASS line (run with ``pytest -s tests/test_acceptance.py`` to see them).

Everything here is fully offline: scripted agents, table-mock backbones,
and hand-computed or brute-forced expected values.
"""

import hashlib
import json
import random
import time

import pytest
from click.testing import CliRunner

from fairgate.agents import (
    AgentKind,
    CannedTransport,
    ChatClient,
    LlmAgents,
    Pricing,
    ResponseCache,
    UsageLedger,
    UsageRecord,
    cost_report,
    render_prompt,
)
from fairgate.agents.ops import Alignment
from fairgate.backends import table_mock_scorer
from fairgate.cli import main as cli_main
from fairgate.errors import UndefinedMetricError
from fairgate.metrics import (
    MetaEvalInput,
    PairRecord,
    PairRoles,
    PairedScores,
    accuracy_explicit,
    pearson,
    ratio_fm,
    segment_acc_t,
    system_pairwise_accuracy,
)
from fairgate.pipeline import (
    FallbackReason,
    GateParams,
    Pipeline,
    aggregate,
    compute_b_amb,
    compute_b_exp,
    compute_gate,
    evaluate_corpus,
)
from fairgate.reporting import evaluate_reports, load_run_report, sweep_cells, write_run_report

from helpers import counterpart_agents, skewed_pair_corpus, write_jsonl
from oracles import acc_t_bruteforce, pearson_bruteforce, system_accuracy_bruteforce


def _ok(name: str) -> None:
    print(f"[ACCEPTANCE] {name}: PASS")


# --------------------------------------------------------------------------
# Criterion 1: aggregation math reproduces hand-computed values (< 1 s).
# --------------------------------------------------------------------------

B_AMB_CASES = [
    # (q_orig, variant scores, expected range)
    (0.8, [0.7, 0.75], 0.10),
    (0.5, [], 0.0),
    (0.7467, [0.7605], 0.0138),
    (0.5, [0.5], 0.0),
    (0.25, [0.75, 0.5], 0.5),
    (0.9, [0.1], 0.8),
    (0.0, [1.0], 1.0),
    (0.6, [0.7, 0.65, 0.62], 0.1),
]

B_EXP_CASES = [
    # (q_orig, variant scores, alignment, expected violation margin)
    (0.9, [0.85], Alignment.ALIGNED, 0.0),
    (0.80, [0.88], Alignment.ALIGNED, 0.08),
    (0.88, [0.80], Alignment.MISALIGNED, 0.08),
    (0.5, [0.25, 0.75], Alignment.ALIGNED, 0.25),
    (0.5, [0.25, 0.4], Alignment.MISALIGNED, 0.1),
    (0.5, [0.6], Alignment.MISALIGNED, 0.0),
    (0.5, [], Alignment.ALIGNED, 0.0),
    (0.3, [0.9], Alignment.NOT_APPLICABLE, 0.0),
]

GATE_CASES = [
    # (b_amb, b_exp, alpha, beta, expected B, expected w)
    (0.0, 0.0, 5.0, 5.0, 0.0, 0.0),
    (0.2, 0.0, 5.0, 5.0, 1.0, 0.5),
    (0.0138, 0.0, 5.0, 5.0, 0.069, 0.069 / 1.069),
    (0.1, 0.1, 5.0, 5.0, 1.0, 0.5),
    (0.0, 0.5, 0.0, 2.0, 1.0, 0.5),
    (0.5, 0.25, 2.0, 4.0, 2.0, 2.0 / 3.0),
    (1.0, 1.0, 0.0, 0.0, 0.0, 0.0),
]

AGGREGATE_CASES = [
    # (q_orig, q_uqe, w, expected blend)
    (0.7605, 0.3, 0.0, 0.7605),
    (0.5, 0.5, 0.3, 0.5),
    (0.7467, 0.95, 0.06455, 0.759823015),
    (0.8, 0.6, 0.5, 0.7),
    (0.0, 1.0, 0.25, 0.25),
    (1.0, 0.0, 0.75, 0.25),
    (0.4, 0.9, 0.2, 0.5),
]


def test_aggregation_math_suite():
    start = time.perf_counter()

    for q_orig, variants, expected in B_AMB_CASES:
        assert compute_b_amb(q_orig, variants) == pytest.approx(expected, abs=1e-9)
    for q_orig, variants, alignment, expected in B_EXP_CASES:
        assert compute_b_exp(q_orig, variants, alignment) == pytest.approx(expected, abs=1e-9)
    for b_amb, b_exp, alpha, beta, total, weight in GATE_CASES:
        breakdown = compute_gate(b_amb, b_exp, GateParams(alpha, beta))
        assert breakdown.total == pytest.approx(total, abs=1e-9)
        assert breakdown.weight == pytest.approx(weight, abs=1e-9)
    for q_orig, q_uqe, weight, expected in AGGREGATE_CASES:
        assert float(aggregate(q_orig, q_uqe, weight)) == pytest.approx(expected, abs=1e-9)

    rng = random.Random(2024)
    previous_weight = None
    for _ in range(500):
        q_orig = rng.random()
        q_uqe = rng.random()
        b_amb = rng.random()
        b_exp = rng.random()
        breakdown = compute_gate(b_amb, b_exp, GateParams(5, 5))
        assert 0.0 <= breakdown.weight < 1.0
        blended = float(aggregate(q_orig, q_uqe, breakdown.weight))
        assert min(q_orig, q_uqe) - 1e-12 <= blended <= max(q_orig, q_uqe) + 1e-12
        # Zero bias forwards the backbone score exactly.
        assert float(aggregate(q_orig, q_uqe, compute_gate(0, 0, GateParams(5, 5)).weight)) == q_orig
        # w strictly increases with B.
        if previous_weight is not None:
            bigger = compute_gate(b_amb + 0.5, b_exp, GateParams(5, 5))
            assert bigger.weight > breakdown.weight
        previous_weight = breakdown.weight
        # Adding a variant score never shrinks the ambiguous range.
        scores = [rng.random() for _ in range(3)]
        assert compute_b_amb(q_orig, scores + [rng.random()]) >= compute_b_amb(q_orig, scores)

    elapsed = time.perf_counter() - start
    assert elapsed < 1.0, f"aggregation math suite took {elapsed:.3f}s"
    _ok(f"aggregation math suite ({len(B_AMB_CASES) + len(B_EXP_CASES) + len(GATE_CASES) + len(AGGREGATE_CASES)} hand cases, {elapsed * 1000:.0f} ms)")


# --------------------------------------------------------------------------
# Criterion 2: skip path passes the backbone score through untouched and
# invokes only the cue detector.
# --------------------------------------------------------------------------

def test_skip_path_passes_backbone_through(tmp_path):
    source = "It has been two days and I have to think about telling all those adventurers."
    target = "Lleva dos días y tengo que ir pensando en decírselo a todos esos aventureros."

    transport = CannedTransport(defaults={AgentKind.CUE: "{}"})  # detector finds nothing
    ledger = UsageLedger()
    agents = LlmAgents(ChatClient(transport, ledger=ledger), "test-model")
    backend = table_mock_scorer({(source, target): 0.7605})
    pipeline = Pipeline(backend=backend, agents=agents, gate=GateParams(5, 5))

    result = pipeline.evaluate_sample("table8-masc", source, target)

    assert float(result.q_final) == 0.7605  # exact, not approx
    assert result.fallback is FallbackReason.NO_CUES
    assert result.bias.weight == 0.0
    assert result.scores.q_uqe is None
    assert len(transport.calls) == 1
    assert set(ledger.totals()["by_agent"]) == {"cue"}
    _ok("skip path: q_final = q_orig = 0.7605 exactly, only the cue agent invoked")


# --------------------------------------------------------------------------
# Criterion 3: debias direction on a synthetic masculine-skewed corpus.
# --------------------------------------------------------------------------

def _run_pairs(corpus, table, alpha=5.0, beta=5.0):
    backend = table_mock_scorer(table)
    finals = {}
    origs = {}
    for role in ("feminine", "masculine"):
        pipeline = Pipeline(backend=backend, agents=counterpart_agents(0.95), gate=GateParams(alpha, beta))
        items = [(s.id, s.source, s.targets[role], s.language_pair) for s in corpus.samples]
        report = evaluate_corpus(pipeline, items, setting="amb_fm", role=role, max_concurrency=4)
        finals[role] = {r.sample_id: float(r.q_final) for r in report.ok_results}
        origs[role] = {r.sample_id: float(r.scores.q_orig) for r in report.ok_results}
        assert report.counts()["failed"] == 0
    return finals, origs


def test_debias_direction_experiment():
    start = time.perf_counter()
    n, delta, lo, hi = 200, 0.02, 0.7, 0.95
    corpus, table = skewed_pair_corpus(n=n, delta=delta, lo=lo, hi=hi)

    finals, origs = _run_pairs(corpus, table, alpha=5.0, beta=5.0)

    def summarize(scores_by_role):
        pairs = PairedScores(
            PairRoles.FEMININE_MASCULINE,
            tuple(
                PairRecord(s.id, scores_by_role["feminine"][s.id], scores_by_role["masculine"][s.id])
                for s in corpus.samples
            ),
        )
        return ratio_fm(pairs).mean

    backbone_ratio = summarize(origs)
    gated_ratio = summarize(finals)

    # Independent oracle for the backbone ratio, straight from the
    # construction: feminine scores base, masculine base + delta.
    bases = [lo + (hi - lo) * i / (n - 1) for i in range(n)]
    oracle = sum(b / (b + delta) for b in bases) / n
    assert backbone_ratio == pytest.approx(oracle, abs=1e-12)

    assert backbone_ratio < 1.0
    assert abs(gated_ratio - 1.0) < abs(backbone_ratio - 1.0)

    elapsed = time.perf_counter() - start
    assert elapsed < 10.0, f"debias experiment took {elapsed:.2f}s"
    _ok(
        f"debias direction: |{gated_ratio:.4f} - 1| < |{backbone_ratio:.4f} - 1| "
        f"on 200 skewed pairs ({elapsed:.2f}s, offline)"
    )


# --------------------------------------------------------------------------
# Criterion 4: sweep sanity: (0,0) reproduces the backbone bit-exactly and
# the mean ratio is non-decreasing in alpha on the skewed corpus.
# --------------------------------------------------------------------------

def test_sweep_sanity(tmp_path):
    corpus, table = skewed_pair_corpus(n=60)
    backend = table_mock_scorer(table)
    paths = []
    for role in ("feminine", "masculine"):
        pipeline = Pipeline(backend=backend, agents=counterpart_agents(0.95), gate=GateParams(5, 5))
        items = [(s.id, s.source, s.targets[role], s.language_pair) for s in corpus.samples]
        report = evaluate_corpus(pipeline, items, setting="amb_fm", role=role)
        paths.append(write_run_report(report, tmp_path, basename=f"report_{role}")["json"])
    loaded = [load_run_report(p) for p in paths]

    grid = [0.0, 2.0, 4.0, 6.0, 8.0, 10.0]
    zero_cells = sweep_cells(loaded, alphas=[0.0], betas=[0.0])
    backbone = evaluate_reports(loaded, score_field="q_orig")
    assert zero_cells[0].mean == backbone.values["ratio_mean"]  # bit-exact
    assert zero_cells[0].std == backbone.values["ratio_std"]

    cells = sweep_cells(loaded, alphas=grid, betas=[5.0])
    assert len(cells) == 6
    means = [c.mean for c in cells]
    assert all(b >= a for a, b in zip(means, means[1:])), f"ratio not monotone: {means}"
    _ok(f"sweep sanity: (0,0) == backbone bit-exact; ratio non-decreasing over alpha {grid}")


# --------------------------------------------------------------------------
# Criterion 5: metrics validated against brute-force oracles.
# --------------------------------------------------------------------------

def _random_grid(rng, coarse):
    n_sys = rng.randint(2, 5)
    n_seg = rng.randint(1, 8)

    def value():
        return rng.choice([0.0, 0.25, 0.5, 0.75, 1.0]) if coarse else rng.random()

    human = [[value() for _ in range(n_seg)] for _ in range(n_sys)]
    metric = [[value() for _ in range(n_seg)] for _ in range(n_sys)]
    meta = MetaEvalInput(
        tuple(f"s{i}" for i in range(n_sys)),
        tuple(tuple(r) for r in human),
        tuple(tuple(r) for r in metric),
    )
    return human, metric, meta


def test_metrics_oracle_suite():
    rng = random.Random(424242)

    checked = 0
    while checked < 120:
        n = rng.randint(2, 16)
        xs = [rng.uniform(-3, 3) for _ in range(n)]
        ys = [rng.uniform(-3, 3) for _ in range(n)]
        expected = pearson_bruteforce(xs, ys)
        if expected is None:
            continue
        assert pearson(xs, ys) == pytest.approx(expected, abs=1e-12)
        checked += 1

    for i in range(120):
        human, metric, meta = _random_grid(rng, coarse=i % 2 == 0)
        expected = system_accuracy_bruteforce(human, metric)
        if expected is None:
            with pytest.raises(UndefinedMetricError):
                system_pairwise_accuracy(meta)
        else:
            assert system_pairwise_accuracy(meta) == expected  # exact

    for i in range(120):
        human, metric, meta = _random_grid(rng, coarse=True)
        assert segment_acc_t(meta) == acc_t_bruteforce(human, metric)  # exact incl. epsilon

    # Strict-inequality indicator: ties never count as correct.
    pairs = PairedScores(
        PairRoles.CORRECT_INCORRECT,
        (PairRecord("a", 0.9, 0.8), PairRecord("b", 0.7, 0.75), PairRecord("c", 0.8, 0.8)),
    )
    assert accuracy_explicit(pairs) == pytest.approx(1 / 3)
    _ok("metrics oracle suite: pearson/system-accuracy/acc-t agree with brute force on 360 grids")


# --------------------------------------------------------------------------
# Criterion 6: prompt goldens.
# --------------------------------------------------------------------------

PROMPT_HASHES = {
    AgentKind.CUE: "7e56c096611b08342e50f5a8507870194be4a87087cf61e61191e05b18671abd",
    AgentKind.AMB: "6ccc68da3c22bcfc76af57d82a72cd619bd07f95baa4fa04f8a3099d3d8e18f4",
    AgentKind.EXP: "442c934800f7a4ed124adf80c271d770d9d75353bdbfa2573f3783e5e64b3a62",
    AgentKind.UQE: "00d7ea992c0db7fb88c23810a4169d02ece4edc3046787a33a17409b375509f2",
}

FULL_UQE_INPUTS = {
    "source": "s",
    "target": "t",
    "ambiguous_pairs_json": "[]",
    "explicit_pairs_json": "[]",
    "amb_alternatives_text": "[]",
    "exp_analysis_text": "null",
}


def test_prompt_goldens():
    cue_sys, cue_user = render_prompt(AgentKind.CUE, {"source": "Hi", "target": "Hola"})
    amb_sys, _ = render_prompt(AgentKind.AMB, {"source": "s", "target": "t", "ambiguous_pairs_json": "[]"})
    exp_sys, _ = render_prompt(AgentKind.EXP, {"source": "s", "target": "t", "explicit_pairs_json": "[]"})
    uqe_sys, _ = render_prompt(AgentKind.UQE, FULL_UQE_INPUTS)

    assert "Output JSON only." in cue_sys
    assert "If substitution is impossible, return an empty list []." in amb_sys
    assert "If substitution is impossible, return an empty list []." in exp_sys
    assert "Critical: --15 points" in uqe_sys
    assert "Major: --5 points" in uqe_sys
    assert "Minor: --1 point" in uqe_sys
    assert "Start from a score of 100 points." in uqe_sys
    assert "Source: ```Hi```" in cue_user

    for kind, rendered in (
        (AgentKind.CUE, cue_sys),
        (AgentKind.AMB, amb_sys),
        (AgentKind.EXP, exp_sys),
        (AgentKind.UQE, uqe_sys),
    ):
        digest = hashlib.sha256(rendered.encode("utf-8")).hexdigest()
        assert digest == PROMPT_HASHES[kind], f"{kind.value} system prompt drifted"

    assert render_prompt(AgentKind.CUE, {"source": "Hi", "target": "Hola"}) == (cue_sys, cue_user)
    _ok("prompt goldens: all anchor strings present, renders byte-stable")


# --------------------------------------------------------------------------
# Criterion 7: determinism, cache replay, and the per-sample call budget.
# --------------------------------------------------------------------------

RICH_CUE_RESPONSE = json.dumps(
    {
        "gender_ambiguous": [{"source_token": "doctor", "target_token": "doctora"}],
        "gender_explicit": [{"source_token": "she", "target_token": "ella"}],
    }
)

RICH_DEFAULTS = {
    AgentKind.CUE: RICH_CUE_RESPONSE,
    AgentKind.AMB: json.dumps(
        [{"transformed_text": "variant-amb", "gender_version": "Masculine"}]
    ),
    AgentKind.EXP: json.dumps(
        [{"error": False, "rationale": "ok", "transformed": [{"transformed_text": "variant-exp", "gender_version": "Feminine"}]}]
    ),
    AgentKind.UQE: json.dumps({"qe_score": 95, "rationale": "clean"}),
}


def _rich_table(sources_targets):
    table = {}
    for source, target in sources_targets:
        table[(source, target)] = 0.8
        table[(source, "variant-amb")] = 0.78
        table[(source, "variant-exp")] = 0.79
    return table


def _run_rich_corpus(cache_dir):
    items = [(f"id{i}", f"source-{i}", f"target-{i}", None) for i in range(6)]
    transport = CannedTransport(defaults=RICH_DEFAULTS)
    ledger = UsageLedger()
    client = ChatClient(transport, cache=ResponseCache(cache_dir), ledger=ledger)
    agents = LlmAgents(client, "test-model")
    backend = table_mock_scorer(_rich_table([(s, t) for _, s, t, _ in items]))
    pipeline = Pipeline(backend=backend, agents=agents, gate=GateParams(5, 5))
    report = evaluate_corpus(pipeline, items, setting="amb_fm", role="feminine", max_concurrency=3)
    return report, transport, ledger, items


def test_determinism_and_cache(tmp_path):
    # (a) Two consecutive CLI runs over fake agents: byte-identical
    # reports, timestamp excluded.
    corpus_path = tmp_path / "corpus.jsonl"
    write_jsonl(
        corpus_path,
        [
            {
                "id": f"s{i}",
                "setting": "amb_fm",
                "source": f"src {i}",
                "targets": {"feminine": f"fem {i}", "masculine": f"masc {i}"},
                "language_pair": "en-es",
            }
            for i in range(4)
        ],
    )
    script = tmp_path / "script.json"
    script.write_text(json.dumps({"defaults": {"cue": "{}"}}))
    config = tmp_path / "config.yaml"
    config.write_text(
        f"""
corpus: {corpus_path}
output_dir: {tmp_path / 'out'}
figures: false
backend:
  kind: constant
  value: 0.5
llm:
  kind: scripted
  script_path: {script}
"""
    )
    runner = CliRunner()
    snapshots = []
    for _ in range(2):
        result = runner.invoke(cli_main, ["run", "--config", str(config)])
        assert result.exit_code == 0, result.output
        snapshots.append((tmp_path / "out" / "report_feminine.json").read_bytes())
    stripped = [
        b"\n".join(line for line in s.splitlines() if b'"created_at"' not in line)
        for s in snapshots
    ]
    assert stripped[0] == stripped[1]

    # (b) Warm cache: the second run never touches the transport.
    cache_dir = tmp_path / "cache"
    report_cold, transport_cold, ledger_cold, items = _run_rich_corpus(cache_dir)
    report_warm, transport_warm, ledger_warm, _ = _run_rich_corpus(cache_dir)
    assert len(transport_cold.calls) == 4 * len(items)
    assert len(transport_warm.calls) == 0
    assert ledger_warm.totals()["calls"] == 0  # hits never ledgered

    # Parsed outputs are byte-identical between the runs.
    for cold, warm in zip(report_cold.ok_results, report_warm.ok_results):
        assert cold == warm

    # (c) Per-sample call budget: at most 4 agent calls even with both cue
    # kinds present.
    per_sample = {}
    for request in transport_cold.calls:
        for _, source, _, _ in items:
            if f"```{source}```" in request.user or f"```{source}" in request.user:
                per_sample[source] = per_sample.get(source, 0) + 1
                break
    assert per_sample and all(count <= 4 for count in per_sample.values())
    assert ledger_cold.totals()["calls"] == 4 * len(items)
    _ok("determinism & cache: byte-identical reruns, zero calls on warm cache, <= 4 calls/sample")


# --------------------------------------------------------------------------
# Criterion 8: cost arithmetic reproduces the reference run total.
# --------------------------------------------------------------------------

def test_cost_arithmetic():
    records = [UsageRecord(input_tokens=157_192, output_tokens=19_824, calls=176)]
    summary = cost_report(records, Pricing(input_per_1k=0.0004, output_per_1k=0.0016), num_samples=100)
    assert summary.total_cost == pytest.approx(0.0946, abs=0.0005)
    assert summary.calls == 176
    assert summary.total_tokens == 177_016
    _ok(f"cost arithmetic: total ${summary.total_cost:.4f} within 0.0005 of 0.0946")
