"""Command-line entry point.

Commands: ``run`` (pipeline over a corpus), ``evaluate`` (metrics from
saved reports), ``sweep`` (gate-parameter grid), ``cache stats``, and
``cost report``. Exit codes: 0 ok, 2 config/input error, 3 backend
unavailable, 4 partial sample failures.
"""

from __future__ import annotations

import logging
import sys
from pathlib import Path

import click

from .agents import Pricing, ResponseCache, UsageRecord, cost_report
from .backends import RemoteBackend
from .config import RunConfig
from .errors import (
    BackendError,
    ConfigError,
    CorpusError,
    FairgateError,
    ReportJoinError,
    UndefinedMetricError,
)
from .reporting import (
    evaluate_reports,
    load_run_report,
    sweep_cells,
    write_metric_report,
    write_sweep,
)
from .runner import run_roles, write_role_reports

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_BACKEND = 3
EXIT_PARTIAL = 4

log = logging.getLogger(__name__)


def _die(code: int, message: str) -> None:
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _load_config(config_path: str | None, **overrides) -> RunConfig:
    config = RunConfig.from_file(config_path) if config_path else RunConfig()
    return config.apply_overrides(**overrides)


def _parse_grid(text: str) -> list[float]:
    try:
        values = [float(v) for v in text.split(",") if v.strip() != ""]
    except ValueError:
        raise ConfigError(f"grid values must be comma-separated numbers, got {text!r}") from None
    if not values:
        raise ConfigError("grid must contain at least one value")
    return values


@click.group()
@click.option("--verbose", is_flag=True, help="Enable debug logging.")
def main(verbose: bool) -> None:
    """Fairness-aware QE pipeline: bias-gated blending of a QE backbone
    with an LLM reasoning scorer."""
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )


_run_options = [
    click.option("--config", "config_path", type=click.Path(), default=None, help="YAML config file."),
    click.option("--corpus", default=None, help="JSONL corpus path."),
    click.option("--setting", default=None, help="Expected corpus setting."),
    click.option("--role", default=None, help="Evaluate only this target role."),
    click.option("--backend-kind", default=None, type=click.Choice(["constant", "table", "remote"])),
    click.option("--backend-endpoint", default=None, help="Remote scoring sidecar base URL."),
    click.option("--backend-scale", default=None, help="Registered scale name of the backend."),
    click.option("--backend-table-path", default=None, help="Score table JSON for the table backend."),
    click.option("--llm-kind", default=None, type=click.Choice(["http", "scripted"])),
    click.option("--llm-endpoint", default=None, help="OpenAI-compatible base URL."),
    click.option("--llm-model", default=None, help="Chat model id."),
    click.option("--llm-script-path", default=None, help="Scripted responses file for offline runs."),
    click.option("--alpha", type=float, default=None, help="Weight on the ambiguous bias term."),
    click.option("--beta", type=float, default=None, help="Weight on the explicit bias term."),
    click.option("--max-concurrency", type=int, default=None),
    click.option("--cache-dir", default=None, help="Response cache directory."),
    click.option("--output-dir", default=None),
    click.option("--figures/--no-figures", "figures", default=None),
    click.option("--native-scores/--canonical-scores", "native_scores", default=None,
                 help="Also report scores on the backbone's native scale."),
]


def _with_run_options(command):
    for option in reversed(_run_options):
        command = option(command)
    return command


def _prepare(config_path, kwargs) -> RunConfig:
    config = _load_config(config_path, **kwargs)
    config.validate()
    return config


def _health_check(config: RunConfig) -> None:
    if config.backend.kind != "remote":
        return
    backend = config.build_backend()
    assert isinstance(backend, RemoteBackend)
    backend.health()


@main.command()
@_with_run_options
def run(config_path, **kwargs) -> None:
    """Run the pipeline over a corpus and write per-role reports."""
    try:
        config = _prepare(config_path, kwargs)
        _health_check(config)
        outcomes = run_roles(config)
        written = write_role_reports(config, outcomes)
    except (ConfigError, CorpusError) as exc:
        _die(EXIT_CONFIG, str(exc))
        return
    except BackendError as exc:
        _die(EXIT_BACKEND, f"backend unavailable: {exc}")
        return

    failed = 0
    for outcome in outcomes:
        counts = outcome.report.counts()
        failed += counts["failed"]
        paths = ", ".join(str(p) for p in written[outcome.role].values())
        click.echo(
            f"[{outcome.role}] samples={counts['samples']} ok={counts['ok']} "
            f"failed={counts['failed']} no_cues={counts['fallback_no_cues']} "
            f"agent_failure={counts['fallback_agent_failure']} -> {paths}"
        )
    if failed:
        _die(EXIT_PARTIAL, f"{failed} sample(s) hard-failed; see reports")


@main.command()
@click.argument("reports", nargs=-1, required=True, type=click.Path(exists=True))
@click.option("--setting", default=None, help="Expected setting of the reports.")
@click.option("--score-field", default="q_final", type=click.Choice(["q_final", "q_orig", "q_uqe"]),
              help="Which per-sample score feeds the metrics.")
@click.option("--output-dir", default="out")
@click.option("--basename", default="metrics")
@click.option("--figures/--no-figures", default=True)
def evaluate(reports, setting, score_field, output_dir, basename, figures) -> None:
    """Compute the setting's metrics from one (MQM) or two (paired) reports."""
    try:
        loaded = [load_run_report(p) for p in reports]
        metric_report = evaluate_reports(loaded, setting=setting, score_field=score_field)
        paths = write_metric_report(metric_report, output_dir, basename)
        if figures:
            from .figures import render_metric_figure

            paths["figure"] = render_metric_figure(
                metric_report, Path(output_dir) / f"{basename}.png"
            )
    except (ConfigError, CorpusError, ReportJoinError, UndefinedMetricError) as exc:
        _die(EXIT_CONFIG, str(exc))
        return
    click.echo(metric_report.format_table())
    click.echo("wrote: " + ", ".join(str(p) for p in paths.values()))


@main.command()
@_with_run_options
@click.option("--alphas", default="0,2,4,6,8,10", help="Comma-separated alpha grid.")
@click.option("--betas", default="5", help="Comma-separated beta grid.")
def sweep(config_path, alphas, betas, **kwargs) -> None:
    """Sweep the gate weights over a grid, reusing cached agent outputs.

    Runs the pipeline once per role (cache hits make reruns free), then
    recomputes only the gate and blend per grid cell.
    """
    try:
        config = _prepare(config_path, kwargs)
        alpha_grid = _parse_grid(alphas)
        beta_grid = _parse_grid(betas)
        _health_check(config)
        outcomes = run_roles(config)
        written = write_role_reports(config, outcomes)
        loaded = [load_run_report(written[o.role]["json"]) for o in outcomes]
        cells = sweep_cells(loaded, alpha_grid, beta_grid, setting=config.setting)
        paths = write_sweep(cells, config.output_dir)
        if config.figures:
            from .figures import render_sweep_figure

            paths["figure"] = render_sweep_figure(cells, Path(config.output_dir) / "sweep.png")
    except (ConfigError, CorpusError, UndefinedMetricError, ReportJoinError) as exc:
        _die(EXIT_CONFIG, str(exc))
        return
    except BackendError as exc:
        _die(EXIT_BACKEND, f"backend unavailable: {exc}")
        return
    for cell in cells:
        click.echo(
            f"alpha={cell.alpha:g} beta={cell.beta:g} {cell.metric} "
            f"mean={cell.mean:.6f} std={cell.std:.6f} var={cell.score_variance:.6f}"
        )
    click.echo("wrote: " + ", ".join(str(p) for p in paths.values()))
    failed = sum(o.report.counts()["failed"] for o in outcomes)
    if failed:
        _die(EXIT_PARTIAL, f"{failed} sample(s) hard-failed; see reports")


@main.group()
def cache() -> None:
    """Response-cache utilities."""


@cache.command("stats")
@click.option("--config", "config_path", type=click.Path(), default=None)
@click.option("--cache-dir", default=None)
def cache_stats(config_path, cache_dir) -> None:
    """Show entry count and size of the response cache."""
    try:
        if cache_dir is None:
            if config_path is None:
                raise ConfigError("provide --cache-dir or a --config with cache_dir set")
            cache_dir = RunConfig.from_file(config_path).cache_dir
            if not cache_dir:
                raise ConfigError("config has no cache_dir configured")
        stats = ResponseCache(cache_dir).stats()
    except FairgateError as exc:
        _die(EXIT_CONFIG, str(exc))
        return
    click.echo(f"directory: {stats['directory']}")
    click.echo(f"entries:   {stats['entries']}")
    click.echo(f"bytes:     {stats['bytes']}")


@main.group()
def cost() -> None:
    """Usage/cost accounting utilities."""


@cost.command("report")
@click.argument("reports", nargs=-1, required=True, type=click.Path(exists=True))
@click.option("--input-per-1k", type=float, default=None, help="USD per 1k input tokens.")
@click.option("--output-per-1k", type=float, default=None, help="USD per 1k output tokens.")
@click.option("--config", "config_path", type=click.Path(), default=None)
def cost_report_cmd(reports, input_per_1k, output_per_1k, config_path) -> None:
    """Aggregate usage from run reports into a cost summary."""
    try:
        pricing = RunConfig.from_file(config_path).pricing() if config_path else Pricing(0.0, 0.0)
        pricing = Pricing(
            input_per_1k if input_per_1k is not None else pricing.input_per_1k,
            output_per_1k if output_per_1k is not None else pricing.output_per_1k,
        )
        records = []
        samples = 0
        for path in reports:
            loaded = load_run_report(path)
            usage = loaded.payload.get("usage", {})
            records.append(
                UsageRecord(
                    input_tokens=int(usage.get("input_tokens", 0)),
                    output_tokens=int(usage.get("output_tokens", 0)),
                    calls=int(usage.get("calls", 0)),
                )
            )
            samples += loaded.payload.get("counts", {}).get("samples", 0)
        summary = cost_report(records, pricing, num_samples=samples or None)
    except (FairgateError, ValueError) as exc:
        _die(EXIT_CONFIG, str(exc))
        return
    click.echo(summary.format_table())


if __name__ == "__main__":
    main()
