"""Exception hierarchy shared across the package.

Errors are grouped by the stage that raises them so callers can catch at
the right granularity: ``AgentError`` covers any LLM-agent failure (the
pipeline degrades to the backbone score), ``BackendError`` is a hard
per-sample failure, everything else signals misuse or bad input.
"""

from __future__ import annotations


class FairgateError(Exception):
    """Base class for all package errors."""


class TaxonomyError(FairgateError):
    """Invalid cue taxonomy definition or lookup."""


class UnknownCategoryError(TaxonomyError):
    """A cue category code outside C1..C12."""

    def __init__(self, token: str):
        super().__init__(f"unknown cue category code: {token!r}")
        self.token = token


class ScaleRangeError(FairgateError):
    """Raw score outside its declared scale by more than the clamp tolerance."""


class TemplateError(FairgateError):
    """A prompt template placeholder was not supplied."""

    def __init__(self, field: str, agent: str):
        super().__init__(f"prompt for agent {agent!r} is missing required field {field!r}")
        self.field = field
        self.agent = agent


class TransportError(FairgateError):
    """Chat-completion transport failed after exhausting retries."""


class AgentError(FairgateError):
    """Base class for LLM-agent failures; the pipeline falls back to q_orig."""


class CueDetectionError(AgentError):
    """Cue detector output could not be parsed into a cue report."""


class VariantGenerationError(AgentError):
    """Variant generator output could not be parsed."""


class UqeScoringError(AgentError):
    """Reasoning scorer returned no usable qe_score."""


class BackendError(FairgateError):
    """QE backend unreachable, protocol violation, or unknown input."""


class CorpusError(FairgateError):
    """Corpus file failed validation; carries the offending line when known."""

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class ConfigError(FairgateError):
    """Run configuration is invalid."""


class UndefinedMetricError(FairgateError):
    """Metric is undefined on the given input (empty, constant, or degenerate)."""


class ReportJoinError(FairgateError):
    """Paired role runs do not cover the same sample ids."""

    def __init__(self, orphans_a: list[str], orphans_b: list[str]):
        super().__init__(
            "sample ids do not match between role runs; "
            f"only in first: {sorted(orphans_a)}; only in second: {sorted(orphans_b)}"
        )
        self.orphans_a = list(orphans_a)
        self.orphans_b = list(orphans_b)
