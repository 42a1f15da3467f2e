"""Run-report serialization, metric evaluation over saved reports, and
gate-parameter sweeps.

Reports serialize to a versioned JSON document plus an aligned-column
text table. Evaluation joins two role runs by sample id (or consumes a
single MQM run) and is a pure function of the report files: re-running
it yields identical bytes. Sweeps never re-call agents; they recompute
only the gate and blend from per-sample bias terms stored in reports.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

from .corpus import Setting
from .errors import ConfigError, ReportJoinError, UndefinedMetricError
from .metrics import (
    CueBreakdownRow,
    MetaEvalInput,
    PairRecord,
    PairRoles,
    PairedScores,
    accuracy_explicit,
    classify_cue_kinds,
    pearson,
    per_cue_breakdown,
    ratio_fm,
    ratio_neutral,
    segment_acc_t,
    system_pairwise_accuracy,
)
from .pipeline import (
    FallbackReason,
    GateParams,
    RunReport,
    SampleResult,
    aggregate,
    compute_gate,
)
from .taxonomy import ScoreScale, denormalize_score

SETTING_PAIR_ROLES: dict[Setting, PairRoles] = {
    Setting.AMB_FM: PairRoles.FEMININE_MASCULINE,
    Setting.AMB_NG: PairRoles.NEUTRAL_GENDERED,
    Setting.EXPLICIT: PairRoles.CORRECT_INCORRECT,
}


# -- run report serialization ------------------------------------------------


def _result_row(result: SampleResult, extras: Mapping | None, native_scale: ScoreScale | None) -> dict:
    row: dict = {
        "sample_id": result.sample_id,
        "status": "ok",
        "q_orig": float(result.scores.q_orig),
        "q_uqe": float(result.scores.q_uqe) if result.scores.q_uqe is not None else None,
        "b_amb": result.bias.b_amb,
        "b_exp": result.bias.b_exp,
        "B": result.bias.total,
        "w": result.bias.weight,
        "q_final": float(result.q_final),
        "fallback": result.fallback.value,
        "alignment": result.variants.alignment.value,
        "cues": [
            {
                "source_span": c.source_span,
                "target_span": c.target_span,
                "kind": c.kind.value,
                "category": c.category.code if c.category else None,
            }
            for c in result.cue_report.cues
        ],
        "variants": [
            {
                "text": v.text,
                "gender": v.gender.value,
                "origin": v.origin.value,
                "score": float(s),
            }
            for v, s in result.scores.variant_scores
        ],
        "rationale": result.rationale,
    }
    if native_scale is not None:
        row["q_orig_native"] = denormalize_score(row["q_orig"], native_scale)
        row["q_final_native"] = denormalize_score(row["q_final"], native_scale)
    if extras:
        row.update(extras)
    return row


def build_report_payload(
    report: RunReport,
    extras_by_id: Mapping[str, Mapping] | None = None,
    native_scale: ScoreScale | None = None,
) -> dict:
    extras_by_id = extras_by_id or {}
    rows = []
    for item in report.results:
        if isinstance(item, SampleResult):
            rows.append(_result_row(item, extras_by_id.get(item.sample_id), native_scale))
        else:
            rows.append(
                {
                    "sample_id": item.sample_id,
                    "status": "failed",
                    "stage": item.stage,
                    "error": item.error,
                    **(extras_by_id.get(item.sample_id) or {}),
                }
            )
    return {
        "schema_version": report.schema_version,
        "created_at": report.created_at,
        "setting": report.setting,
        "role": report.role,
        "gate": {"alpha": report.gate.alpha, "beta": report.gate.beta},
        "backend": report.backend,
        "counts": report.counts(),
        "usage": report.usage,
        "samples": rows,
        "config": report.config,
    }


def format_run_table(payload: Mapping) -> str:
    """Human-readable per-sample table: id, scores, bias terms, gate weight."""
    header = ["id", "q_orig", "q_uqe", "b_amb", "b_exp", "w", "q_final", "fallback"]
    body: list[list[str]] = []

    def fmt(value) -> str:
        return "-" if value is None else f"{value:.4f}"

    for row in payload["samples"]:
        if row.get("status") == "failed":
            body.append([row["sample_id"], "FAILED", "-", "-", "-", "-", "-", row.get("stage", "")])
            continue
        body.append(
            [
                row["sample_id"],
                fmt(row["q_orig"]),
                fmt(row["q_uqe"]),
                fmt(row["b_amb"]),
                fmt(row["b_exp"]),
                fmt(row["w"]),
                fmt(row["q_final"]),
                row["fallback"],
            ]
        )
    widths = [max(len(header[i]), *(len(r[i]) for r in body)) if body else len(header[i]) for i in range(len(header))]
    lines = [
        "  ".join(h.ljust(widths[i]) for i, h in enumerate(header)),
        "  ".join("-" * w for w in widths),
    ]
    lines += ["  ".join(cell.ljust(widths[i]) for i, cell in enumerate(row)) for row in body]
    counts = payload["counts"]
    lines.append("")
    lines.append(
        f"samples={counts['samples']} ok={counts['ok']} failed={counts['failed']} "
        f"no_cues={counts['fallback_no_cues']} agent_failure={counts['fallback_agent_failure']}"
    )
    return "\n".join(lines) + "\n"


def dump_json(payload: Mapping, path: Path) -> None:
    path.write_text(json.dumps(payload, ensure_ascii=False, indent=2) + "\n", "utf-8")


def write_run_report(
    report: RunReport,
    out_dir: str | Path,
    *,
    basename: str = "report",
    extras_by_id: Mapping[str, Mapping] | None = None,
    native_scale: ScoreScale | None = None,
    formats: Sequence[str] = ("json", "table"),
) -> dict[str, Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    payload = build_report_payload(report, extras_by_id, native_scale)
    paths: dict[str, Path] = {}
    if "json" in formats:
        paths["json"] = out_dir / f"{basename}.json"
        dump_json(payload, paths["json"])
    if "table" in formats:
        paths["table"] = out_dir / f"{basename}.txt"
        paths["table"].write_text(format_run_table(payload), "utf-8")
    return paths


# -- loading reports back ------------------------------------------------------


@dataclass(frozen=True)
class ReportRow:
    sample_id: str
    status: str
    q_orig: float | None = None
    q_uqe: float | None = None
    b_amb: float = 0.0
    b_exp: float = 0.0
    weight: float = 0.0
    q_final: float | None = None
    fallback: str = "none"
    has_ambiguous: bool = False
    has_explicit: bool = False
    source: str | None = None
    gold: float | None = None
    system_id: str | None = None

    def score(self, score_field: str) -> float:
        value = {"q_final": self.q_final, "q_orig": self.q_orig, "q_uqe": self.q_uqe}.get(score_field)
        if value is None:
            raise UndefinedMetricError(
                f"sample {self.sample_id} has no {score_field!r} score"
            )
        return value

    @property
    def cue_class(self) -> str:
        return classify_cue_kinds(self.has_ambiguous, self.has_explicit)


@dataclass
class LoadedReport:
    path: Path
    setting: str | None
    role: str | None
    gate: GateParams
    rows: list[ReportRow]
    payload: dict = field(repr=False, default_factory=dict)

    @property
    def ok_rows(self) -> list[ReportRow]:
        return [r for r in self.rows if r.status == "ok"]


def load_run_report(path: str | Path) -> LoadedReport:
    path = Path(path)
    payload = json.loads(path.read_text("utf-8"))
    if payload.get("schema_version") != 1:
        raise ConfigError(f"unsupported report schema_version in {path}")
    rows: list[ReportRow] = []
    for row in payload.get("samples", []):
        if row.get("status") != "ok":
            rows.append(ReportRow(sample_id=row["sample_id"], status="failed"))
            continue
        cues = row.get("cues", [])
        rows.append(
            ReportRow(
                sample_id=row["sample_id"],
                status="ok",
                q_orig=row.get("q_orig"),
                q_uqe=row.get("q_uqe"),
                b_amb=row.get("b_amb", 0.0),
                b_exp=row.get("b_exp", 0.0),
                weight=row.get("w", 0.0),
                q_final=row.get("q_final"),
                fallback=row.get("fallback", "none"),
                has_ambiguous=any(c.get("kind") == "ambiguous" for c in cues),
                has_explicit=any(c.get("kind") == "explicit" for c in cues),
                source=row.get("source"),
                gold=row.get("gold"),
                system_id=row.get("system_id"),
            )
        )
    return LoadedReport(
        path=path,
        setting=payload.get("setting"),
        role=payload.get("role"),
        gate=GateParams(payload["gate"]["alpha"], payload["gate"]["beta"]),
        rows=rows,
        payload=payload,
    )


# -- paired evaluation --------------------------------------------------------


def _join_rows(
    a: LoadedReport, b: LoadedReport
) -> list[tuple[str, ReportRow, ReportRow]]:
    rows_a = {r.sample_id: r for r in a.rows}
    rows_b = {r.sample_id: r for r in b.rows}
    only_a = sorted(set(rows_a) - set(rows_b))
    only_b = sorted(set(rows_b) - set(rows_a))
    if only_a or only_b:
        raise ReportJoinError(only_a, only_b)
    return [(r.sample_id, r, rows_b[r.sample_id]) for r in a.rows]


def build_paired_scores(
    report_a: LoadedReport,
    report_b: LoadedReport,
    roles: PairRoles,
    score_field: str = "q_final",
) -> tuple[PairedScores, dict[str, str], list[str]]:
    """Join two role runs into paired scores plus per-id cue classes.

    Samples that failed in either run are dropped (and listed); cue
    classes union the detections of both runs.
    """
    records: list[PairRecord] = []
    cue_classes: dict[str, str] = {}
    dropped: list[str] = []
    for sample_id, row_a, row_b in _join_rows(report_a, report_b):
        if row_a.status != "ok" or row_b.status != "ok":
            dropped.append(sample_id)
            continue
        records.append(PairRecord(sample_id, row_a.score(score_field), row_b.score(score_field)))
        cue_classes[sample_id] = classify_cue_kinds(
            row_a.has_ambiguous or row_b.has_ambiguous,
            row_a.has_explicit or row_b.has_explicit,
        )
    return PairedScores(roles, tuple(records)), cue_classes, dropped


def _order_reports_by_role(
    reports: Sequence[LoadedReport], roles: PairRoles
) -> tuple[LoadedReport, LoadedReport]:
    by_role = {r.role: r for r in reports}
    missing = [role for role in (roles.role_a, roles.role_b) if role not in by_role]
    if missing:
        raise ConfigError(
            f"paired evaluation needs one report per role {roles.value}; missing {missing}, "
            f"got roles {[r.role for r in reports]}"
        )
    return by_role[roles.role_a], by_role[roles.role_b]


# -- MQM meta evaluation --------------------------------------------------------


def build_meta_eval(report: LoadedReport, score_field: str = "q_final") -> MetaEvalInput:
    """Assemble the system x segment grid from one MQM run.

    Segments are keyed by source text: the same source scored under every
    system. Missing cells or duplicates make the grid undefined.
    """
    cells: dict[tuple[str, str], tuple[float, float]] = {}
    systems: set[str] = set()
    segments: set[str] = set()
    for row in report.ok_rows:
        if row.system_id is None or row.gold is None or row.source is None:
            raise UndefinedMetricError(
                f"sample {row.sample_id} lacks system_id/gold/source required for meta-evaluation"
            )
        key = (row.system_id, row.source)
        if key in cells:
            raise UndefinedMetricError(f"duplicate (system, segment) cell: {key!r}")
        cells[key] = (row.gold, row.score(score_field))
        systems.add(row.system_id)
        segments.add(row.source)
    if not cells:
        raise UndefinedMetricError("no usable MQM rows")
    ordered_systems = sorted(systems)
    ordered_segments = sorted(segments)
    human: dict[str, list[float]] = {}
    metric: dict[str, list[float]] = {}
    for system in ordered_systems:
        human_row, metric_row = [], []
        for segment in ordered_segments:
            if (system, segment) not in cells:
                raise UndefinedMetricError(
                    f"system {system!r} is missing segment {segment[:40]!r}; grids must align"
                )
            gold, score = cells[(system, segment)]
            human_row.append(gold)
            metric_row.append(score)
        human[system] = human_row
        metric[system] = metric_row
    return MetaEvalInput.from_grids(human, metric)


# -- metric report --------------------------------------------------------------


@dataclass
class MetricReport:
    setting: str
    score_field: str
    values: dict
    per_cue: list[CueBreakdownRow] = field(default_factory=list)
    per_sample: list[tuple[str, float]] = field(default_factory=list)
    dropped: list[str] = field(default_factory=list)

    def as_dict(self) -> dict:
        return {
            "setting": self.setting,
            "score_field": self.score_field,
            "values": self.values,
            "per_cue": [
                {
                    "cue_class": row.cue_class,
                    "count": row.count,
                    "proportion_pct": row.proportion_pct,
                    "metric": row.metric,
                }
                for row in self.per_cue
            ],
            "per_sample": [{"id": i, "value": v} for i, v in self.per_sample],
            "dropped": self.dropped,
        }

    def format_table(self) -> str:
        lines = [f"setting: {self.setting}   score: {self.score_field}"]
        width = max(len(k) for k in self.values) if self.values else 0
        for key, value in self.values.items():
            rendered = f"{value:.4f}" if isinstance(value, float) else str(value)
            lines.append(f"{key:<{width}}  {rendered}")
        if self.dropped:
            lines.append(f"dropped (failed in either run): {len(self.dropped)}")
        if self.per_cue:
            lines.append("")
            lines.append(f"{'Detected Cue Type':<18}  {'Count':>6}  {'Proportion (%)':>14}  {'Metric':>8}")
            for row in self.per_cue:
                metric = f"{row.metric:.4f}" if row.metric is not None else "-"
                lines.append(
                    f"{row.cue_class:<18}  {row.count:>6}  {row.proportion_pct:>14.1f}  {metric:>8}"
                )
        return "\n".join(lines) + "\n"


def _cue_count_rows(report: LoadedReport) -> list[CueBreakdownRow]:
    """Detected-cue distribution (counts only) for single-run settings."""
    from .metrics import CUE_CLASS_LABELS

    rows = report.ok_rows
    total = len(rows)
    counts = {label: 0 for label in CUE_CLASS_LABELS}
    for row in rows:
        counts[row.cue_class] += 1
    return [
        CueBreakdownRow(label, counts[label], 100.0 * counts[label] / total if total else 0.0, None)
        for label in CUE_CLASS_LABELS
    ]


def evaluate_reports(
    reports: Sequence[LoadedReport],
    setting: Setting | str | None = None,
    score_field: str = "q_final",
) -> MetricReport:
    """Compute the setting's metrics from saved run reports."""
    settings = {r.setting for r in reports}
    if len(settings) != 1:
        raise ConfigError(f"reports disagree on setting: {sorted(settings)}")
    found = settings.pop()
    if setting is not None and Setting(str(setting)).value != found:
        raise ConfigError(f"reports are for setting {found!r}, expected {setting!r}")
    setting_enum = Setting(found)

    if setting_enum is Setting.MQM:
        if len(reports) != 1:
            raise ConfigError("MQM evaluation takes exactly one report")
        meta = build_meta_eval(reports[0], score_field)
        acc_t, epsilon = segment_acc_t(meta)
        system_human = [sum(row) / len(row) for row in meta.human]
        system_metric = [sum(row) / len(row) for row in meta.metric]
        flat_human = [v for row in meta.human for v in row]
        flat_metric = [v for row in meta.metric for v in row]
        values = {
            "n_systems": len(meta.systems),
            "n_segments": meta.num_segments,
            "system_accuracy": system_pairwise_accuracy(meta),
            "system_pearson": pearson(system_metric, system_human),
            "segment_acc_t": acc_t,
            "acc_t_epsilon": epsilon,
            "segment_pearson": pearson(flat_metric, flat_human),
        }
        return MetricReport(
            setting=found,
            score_field=score_field,
            values=values,
            per_cue=_cue_count_rows(reports[0]),
        )

    if len(reports) != 2:
        raise ConfigError(f"{found} evaluation takes exactly two role reports")
    roles = SETTING_PAIR_ROLES[setting_enum]
    report_a, report_b = _order_reports_by_role(reports, roles)
    pairs, cue_classes, dropped = build_paired_scores(report_a, report_b, roles, score_field)
    per_cue = per_cue_breakdown(cue_classes, pairs)

    if setting_enum is Setting.EXPLICIT:
        values = {"n_pairs": len(pairs.records), "accuracy": accuracy_explicit(pairs)}
        per_sample = [
            (r.id, 1.0 if r.score_a > r.score_b else 0.0) for r in pairs.records
        ]
    else:
        summary = ratio_fm(pairs) if setting_enum is Setting.AMB_FM else ratio_neutral(pairs)
        values = {
            "n_pairs": len(pairs.records),
            "ratio_mean": summary.mean,
            "ratio_std": summary.std,
            "excluded_zero_denominator": summary.excluded_count,
        }
        per_sample = list(summary.per_sample)
    return MetricReport(
        setting=found,
        score_field=score_field,
        values=values,
        per_cue=per_cue,
        per_sample=per_sample,
        dropped=dropped,
    )


def write_metric_report(report: MetricReport, out_dir: str | Path, basename: str = "metrics") -> dict[str, Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = {"json": out_dir / f"{basename}.json", "table": out_dir / f"{basename}.txt"}
    dump_json(report.as_dict(), paths["json"])
    paths["table"].write_text(report.format_table(), "utf-8")
    return paths


# -- gate-parameter sweep --------------------------------------------------------


@dataclass(frozen=True)
class SweepCell:
    alpha: float
    beta: float
    metric: str
    mean: float
    std: float
    score_variance: float


def regate_row(row: ReportRow, gate: GateParams) -> float:
    """Recompute q_final for one sample under new gate weights.

    Fallback samples keep q_final = q_orig at every (alpha, beta); the
    gate only ever re-mixes samples that completed all four stages.
    """
    if row.q_orig is None:
        raise UndefinedMetricError(f"sample {row.sample_id} has no q_orig")
    if row.fallback != FallbackReason.NONE.value or row.q_uqe is None:
        return row.q_orig
    breakdown = compute_gate(row.b_amb, row.b_exp, gate)
    return float(aggregate(row.q_orig, row.q_uqe, breakdown.weight))


def sweep_cells(
    reports: Sequence[LoadedReport],
    alphas: Sequence[float],
    betas: Sequence[float],
    setting: Setting | str | None = None,
) -> list[SweepCell]:
    """Recompute the setting's metric over an (alpha, beta) grid.

    Agent and backbone outputs are fixed; only the gate and blend are
    recomputed per cell, so a sweep costs no LLM or backend calls.
    """
    settings = {r.setting for r in reports}
    if len(settings) != 1:
        raise ConfigError(f"reports disagree on setting: {sorted(settings)}")
    found = Setting(settings.pop())
    if setting is not None and Setting(str(setting)) is not found:
        raise ConfigError(f"reports are for setting {found.value!r}, expected {setting!r}")
    if found is Setting.MQM:
        raise ConfigError("sweep requires a paired setting (amb_fm, amb_ng, or explicit)")
    roles = SETTING_PAIR_ROLES[found]
    report_a, report_b = _order_reports_by_role(reports, roles)
    joined = [
        (sample_id, row_a, row_b)
        for sample_id, row_a, row_b in _join_rows(report_a, report_b)
        if row_a.status == "ok" and row_b.status == "ok"
    ]
    if not joined:
        raise UndefinedMetricError("no usable pairs to sweep")

    metric_name = {
        Setting.AMB_FM: "ratio_fm",
        Setting.AMB_NG: "ratio_neutral",
        Setting.EXPLICIT: "accuracy_explicit",
    }[found]

    cells: list[SweepCell] = []
    for alpha in alphas:
        for beta in betas:
            gate = GateParams(alpha, beta)
            finals_a = [regate_row(row_a, gate) for _, row_a, _ in joined]
            finals_b = [regate_row(row_b, gate) for _, _, row_b in joined]
            pairs = PairedScores(
                roles,
                tuple(
                    PairRecord(sample_id, fa, fb)
                    for (sample_id, _, _), fa, fb in zip(joined, finals_a, finals_b)
                ),
            )
            if found is Setting.EXPLICIT:
                values = [1.0 if r.score_a > r.score_b else 0.0 for r in pairs.records]
                mean = sum(values) / len(values)
                std = _pop_std(values, mean)
            else:
                summary = ratio_fm(pairs) if found is Setting.AMB_FM else ratio_neutral(pairs)
                mean, std = summary.mean, summary.std
            all_scores = finals_a + finals_b
            score_mean = sum(all_scores) / len(all_scores)
            variance = sum((v - score_mean) ** 2 for v in all_scores) / len(all_scores)
            cells.append(SweepCell(alpha, beta, metric_name, mean, std, variance))
    return cells


def _pop_std(values: Sequence[float], mean: float) -> float:
    return math.sqrt(sum((v - mean) ** 2 for v in values) / len(values)) if values else 0.0


def write_sweep(cells: Sequence[SweepCell], out_dir: str | Path, basename: str = "sweep") -> dict[str, Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = {"json": out_dir / f"{basename}.json", "csv": out_dir / f"{basename}.csv"}
    payload = [
        {
            "alpha": c.alpha,
            "beta": c.beta,
            "metric": c.metric,
            "mean": c.mean,
            "std": c.std,
            "score_variance": c.score_variance,
        }
        for c in cells
    ]
    dump_json(payload, paths["json"])
    with paths["csv"].open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["alpha", "beta", "metric", "mean", "std", "score_variance"])
        for c in cells:
            writer.writerow([c.alpha, c.beta, c.metric, c.mean, c.std, c.score_variance])
    return paths
