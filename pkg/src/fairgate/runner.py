"""Glue between a validated RunConfig and the pipeline: load the corpus,
build the agent stack, evaluate every requested role, and write reports.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from .agents import UsageLedger
from .config import RunConfig
from .corpus import Corpus, CorpusSample, REQUIRED_ROLES, load_corpus
from .errors import ConfigError
from .pipeline import Pipeline, RunReport, evaluate_corpus
from .reporting import write_run_report
from .taxonomy import get_scale

log = logging.getLogger(__name__)


@dataclass
class RoleRun:
    role: str
    report: RunReport
    extras_by_id: dict
    ledger: UsageLedger


def _sample_extras(sample: CorpusSample, role: str) -> dict:
    extras = {
        "source": sample.source,
        "target": sample.targets[role],
        "language_pair": sample.language_pair,
    }
    if sample.gold is not None:
        extras["gold"] = sample.gold
    if sample.system_id is not None:
        extras["system_id"] = sample.system_id
    return extras


def resolve_roles(corpus: Corpus, requested: str | None) -> list[str]:
    if corpus.setting is None:
        raise ConfigError("cannot run over an empty corpus without a declared setting")
    available = REQUIRED_ROLES[corpus.setting]
    if requested is None:
        return list(available)
    if requested not in available:
        raise ConfigError(
            f"role {requested!r} is not defined for setting {corpus.setting.value}; "
            f"available: {list(available)}"
        )
    return [requested]


def run_roles(config: RunConfig, corpus: Corpus | None = None) -> list[RoleRun]:
    """Evaluate the corpus once per requested role.

    Each role gets a fresh usage ledger (reports stay per-role) while the
    response cache, when configured, is shared across roles and runs.
    """
    config.validate()
    if corpus is None:
        corpus = load_corpus(config.corpus, config.setting)
    roles = resolve_roles(corpus, config.role)

    backend = config.build_backend()
    outcomes: list[RoleRun] = []
    for role in roles:
        ledger = UsageLedger()
        agents = config.build_agents(ledger)
        pipeline = Pipeline(backend=backend, agents=agents, gate=config.gate_params())
        items = [(s.id, s.source, s.targets[role], s.language_pair) for s in corpus.samples]
        report = evaluate_corpus(
            pipeline,
            items,
            setting=corpus.setting.value if corpus.setting else None,
            role=role,
            max_concurrency=config.max_concurrency,
            config=config.snapshot(),
        )
        report.usage = ledger.totals()
        extras = {s.id: _sample_extras(s, role) for s in corpus.samples}
        outcomes.append(RoleRun(role, report, extras, ledger))
    return outcomes


def write_role_reports(
    config: RunConfig, outcomes: Sequence[RoleRun]
) -> dict[str, dict[str, Path]]:
    """Write report.json/.txt (and optionally a figure) per role."""
    native_scale = get_scale(config.backend.scale) if config.native_scores else None
    written: dict[str, dict[str, Path]] = {}
    for outcome in outcomes:
        basename = f"report_{outcome.role}"
        paths = write_run_report(
            outcome.report,
            config.output_dir,
            basename=basename,
            extras_by_id=outcome.extras_by_id,
            native_scale=native_scale,
            formats=config.report_formats,
        )
        if config.figures:
            from .figures import render_run_figure
            from .reporting import build_report_payload

            payload = build_report_payload(outcome.report, outcome.extras_by_id, native_scale)
            paths["figure"] = render_run_figure(
                payload, Path(config.output_dir) / f"{basename}.png"
            )
        written[outcome.role] = paths
    return written
