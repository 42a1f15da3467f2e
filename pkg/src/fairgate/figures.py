"""Matplotlib renderings of run, metric, and sweep outputs.

Figures are written next to the JSON/CSV artifacts; the delimited files
remain the canonical outputs and every figure can be regenerated from
them.
"""

from __future__ import annotations

from pathlib import Path
from typing import Mapping, Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

from .reporting import MetricReport, SweepCell  # noqa: E402


def render_run_figure(payload: Mapping, path: str | Path) -> Path:
    """Histogram of backbone vs final scores plus gate weights."""
    rows = [r for r in payload["samples"] if r.get("status") == "ok"]
    path = Path(path)
    fig, (ax_scores, ax_weights) = plt.subplots(1, 2, figsize=(9, 3.5))
    if rows:
        q_orig = [r["q_orig"] for r in rows]
        q_final = [r["q_final"] for r in rows]
        bins = 20
        ax_scores.hist(q_orig, bins=bins, alpha=0.6, label="q_orig")
        ax_scores.hist(q_final, bins=bins, alpha=0.6, label="q_final")
        ax_scores.legend()
        ax_weights.hist([r["w"] for r in rows], bins=bins, color="tab:purple")
    ax_scores.set_xlabel("canonical score")
    ax_scores.set_ylabel("samples")
    ax_scores.set_title("backbone vs gated scores")
    ax_weights.set_xlabel("gate weight w")
    ax_weights.set_title("bias-gate weights")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def render_metric_figure(report: MetricReport, path: str | Path) -> Path:
    """Distribution of per-sample ratios (or wins) with the mean marked."""
    path = Path(path)
    values = [v for _, v in report.per_sample]
    fig, ax = plt.subplots(figsize=(6, 3.5))
    if values:
        ax.hist(values, bins=30, color="tab:blue", alpha=0.8)
        mean = sum(values) / len(values)
        ax.axvline(mean, color="tab:red", linestyle="--", label=f"mean = {mean:.4f}")
        if report.setting in ("amb_fm", "amb_ng"):
            ax.axvline(1.0, color="black", linewidth=0.8, label="parity")
        ax.legend()
    ax.set_xlabel("win indicator" if "accuracy" in report.values else "per-sample ratio")
    ax.set_ylabel("samples")
    ax.set_title(f"{report.setting} ({report.score_field})")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def render_sweep_figure(cells: Sequence[SweepCell], path: str | Path) -> Path:
    """Metric mean and score variance against the swept gate weight.

    One line per fixed value of the other weight, matching the usual
    two-panel ablation layout.
    """
    path = Path(path)
    alphas = sorted({c.alpha for c in cells})
    betas = sorted({c.beta for c in cells})
    # Sweep along whichever axis actually varies; alpha wins ties.
    sweep_alpha = len(alphas) >= len(betas)
    x_label, line_label = ("alpha", "beta") if sweep_alpha else ("beta", "alpha")

    fig, (ax_mean, ax_var) = plt.subplots(1, 2, figsize=(9, 3.5))
    line_values = betas if sweep_alpha else alphas
    for fixed in line_values:
        points = sorted(
            (
                (c.alpha if sweep_alpha else c.beta, c.mean, c.score_variance)
                for c in cells
                if (c.beta if sweep_alpha else c.alpha) == fixed
            ),
        )
        if not points:
            continue
        xs = [p[0] for p in points]
        ax_mean.plot(xs, [p[1] for p in points], marker="o", label=f"{line_label}={fixed:g}")
        ax_var.plot(xs, [p[2] for p in points], marker="o", label=f"{line_label}={fixed:g}")
    metric = cells[0].metric if cells else "metric"
    ax_mean.set_xlabel(x_label)
    ax_mean.set_ylabel(f"{metric} mean")
    if metric.startswith("ratio"):
        ax_mean.axhline(1.0, color="black", linewidth=0.8)
    ax_var.set_xlabel(x_label)
    ax_var.set_ylabel("score variance")
    ax_mean.legend()
    ax_var.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path
