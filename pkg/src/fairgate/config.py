"""Run configuration: a single YAML file with ``${VAR}`` environment
interpolation for secrets, overridable field-by-field from CLI flags.

The config also acts as the factory for the concrete backend and agent
stack, so the CLI and tests build runs the same way.
"""

from __future__ import annotations

import json
import os
import re
from dataclasses import dataclass, field, asdict
from pathlib import Path
from typing import Any, Mapping

import yaml

from .agents import (
    CannedTransport,
    ChatClient,
    HttpTransport,
    LlmAgents,
    Pricing,
    ResponseCache,
    UsageLedger,
)
from .backends import ConstantBackend, QeBackend, RemoteBackend, TableBackend
from .corpus import Setting
from .errors import ConfigError
from .pipeline import GateParams
from .taxonomy import SCALES, get_scale, load_taxonomy

_ENV_RE = re.compile(r"\$\{([A-Za-z_][A-Za-z0-9_]*)(?::-([^}]*))?\}")


def interpolate_env(text: str, env: Mapping[str, str] | None = None) -> str:
    """Substitute ``${VAR}`` / ``${VAR:-default}`` from the environment.

    A reference without a default to an unset variable is an error so
    missing secrets fail loudly before any network call.
    """
    env = os.environ if env is None else env

    def replace(match: re.Match) -> str:
        name, default = match.group(1), match.group(2)
        if name in env:
            return env[name]
        if default is not None:
            return default
        raise ConfigError(f"environment variable {name!r} referenced in config is not set")

    return _ENV_RE.sub(replace, text)


@dataclass
class BackendConfig:
    kind: str = "constant"  # constant | table | remote
    endpoint: str | None = None
    scale: str = "unit"
    value: float = 0.5
    table_path: str | None = None
    max_inflight: int = 8

    def validate(self) -> None:
        if self.kind not in ("constant", "table", "remote"):
            raise ConfigError(f"backend.kind must be constant|table|remote, got {self.kind!r}")
        if self.kind == "remote" and not self.endpoint:
            raise ConfigError("backend.kind=remote requires backend.endpoint")
        if self.kind == "table" and not self.table_path:
            raise ConfigError("backend.kind=table requires backend.table_path")
        if self.scale not in SCALES:
            raise ConfigError(f"unknown backend scale {self.scale!r}; registered: {sorted(SCALES)}")


@dataclass
class LlmConfig:
    kind: str = "scripted"  # http | scripted
    endpoint: str = "https://api.openai.com/v1"
    model: str = "gpt-4.1-mini"
    api_key_env: str = "OPENAI_API_KEY"
    script_path: str | None = None
    max_retries: int = 3
    json_reasks: int = 2
    max_output_tokens: int = 1024
    batch_cues: bool = True
    max_inflight: int = 8

    def validate(self) -> None:
        if self.kind not in ("http", "scripted"):
            raise ConfigError(f"llm.kind must be http|scripted, got {self.kind!r}")
        if self.kind == "scripted" and not self.script_path:
            raise ConfigError("llm.kind=scripted requires llm.script_path")
        if self.max_retries < 0 or self.json_reasks < 0:
            raise ConfigError("retry counts must be non-negative")


@dataclass
class RunConfig:
    corpus: str = ""
    setting: str | None = None
    role: str | None = None
    backend: BackendConfig = field(default_factory=BackendConfig)
    llm: LlmConfig = field(default_factory=LlmConfig)
    alpha: float = 5.0
    beta: float = 5.0
    max_concurrency: int = 4
    cache_dir: str | None = None
    pricing_input_per_1k: float = 0.0004
    pricing_output_per_1k: float = 0.0016
    output_dir: str = "out"
    report_formats: tuple = ("json", "table")
    figures: bool = True
    native_scores: bool = False
    taxonomy_path: str | None = None  # overrides the bundled cue taxonomy

    def validate(self) -> None:
        if not self.corpus:
            raise ConfigError("corpus path is required")
        self.report_formats = tuple(self.report_formats)
        unknown_formats = set(self.report_formats) - {"json", "table"}
        if "json" not in self.report_formats:
            raise ConfigError("report_formats must include 'json' (evaluate and sweep consume it)")
        if unknown_formats:
            raise ConfigError(f"unknown report formats: {sorted(unknown_formats)}")
        if self.alpha < 0 or self.beta < 0:
            raise ConfigError("alpha and beta must be non-negative")
        if self.max_concurrency < 1:
            raise ConfigError("max_concurrency must be >= 1")
        if self.pricing_input_per_1k < 0 or self.pricing_output_per_1k < 0:
            raise ConfigError("pricing rates must be non-negative")
        if self.setting is not None:
            try:
                Setting(self.setting)
            except ValueError:
                raise ConfigError(
                    f"unknown setting {self.setting!r}; expected one of {[s.value for s in Setting]}"
                ) from None
        self.backend.validate()
        self.llm.validate()

    # -- construction ----------------------------------------------------

    @classmethod
    def from_dict(cls, payload: Mapping[str, Any]) -> "RunConfig":
        payload = dict(payload)

        def build(section_cls, section_payload, section_name):
            try:
                return section_cls(**(section_payload or {}))
            except TypeError as exc:
                raise ConfigError(f"invalid {section_name} section: {exc}") from None

        backend = build(BackendConfig, payload.pop("backend", {}), "backend")
        llm = build(LlmConfig, payload.pop("llm", {}), "llm")
        known = {f for f in cls.__dataclass_fields__ if f not in ("backend", "llm")}
        unknown = set(payload) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        try:
            return cls(backend=backend, llm=llm, **payload)
        except TypeError as exc:
            raise ConfigError(f"invalid config: {exc}") from None

    @classmethod
    def from_file(cls, path: str | Path) -> "RunConfig":
        path = Path(path)
        if not path.exists():
            raise ConfigError(f"config file not found: {path}")
        text = interpolate_env(path.read_text("utf-8"))
        try:
            payload = yaml.safe_load(text) or {}
        except yaml.YAMLError as exc:
            raise ConfigError(f"config file is not valid YAML: {exc}") from None
        if not isinstance(payload, dict):
            raise ConfigError("config file must define a mapping at the top level")
        return cls.from_dict(payload)

    def apply_overrides(self, **overrides: Any) -> "RunConfig":
        """Return a copy with non-None overrides applied (CLI flags win)."""
        for key, value in overrides.items():
            if value is None:
                continue
            if key.startswith("backend_"):
                setattr(self.backend, key[len("backend_"):], value)
            elif key.startswith("llm_"):
                setattr(self.llm, key[len("llm_"):], value)
            elif key in self.__dataclass_fields__:
                setattr(self, key, value)
            else:
                raise ConfigError(f"unknown override {key!r}")
        return self

    def snapshot(self) -> dict:
        """Config as stored in run reports; never contains secret values."""
        payload = asdict(self)
        payload["llm"]["api_key_env"] = self.llm.api_key_env  # env var name only
        return payload

    def gate_params(self) -> GateParams:
        return GateParams(alpha=self.alpha, beta=self.beta)

    def pricing(self) -> Pricing:
        return Pricing(self.pricing_input_per_1k, self.pricing_output_per_1k)

    def build_backend(self) -> QeBackend:
        scale = get_scale(self.backend.scale)
        if self.backend.kind == "constant":
            return ConstantBackend(self.backend.value)
        if self.backend.kind == "table":
            return TableBackend(load_score_table(self.backend.table_path), scale)
        return RemoteBackend(
            self.backend.endpoint,
            expected_scale=self.backend.scale,
            max_inflight=self.backend.max_inflight,
        )

    def build_agents(self, ledger: UsageLedger) -> LlmAgents:
        if self.llm.kind == "scripted":
            transport = CannedTransport.from_file(self.llm.script_path)
        else:
            transport = HttpTransport(
                self.llm.endpoint,
                api_key_env=self.llm.api_key_env,
                max_retries=self.llm.max_retries,
                max_inflight=self.llm.max_inflight,
            )
        cache = ResponseCache(self.cache_dir) if self.cache_dir else None
        client = ChatClient(transport, cache=cache, ledger=ledger, pricing=self.pricing())
        taxonomy = load_taxonomy(self.taxonomy_path) if self.taxonomy_path else None
        return LlmAgents(
            client,
            self.llm.model,
            max_output_tokens=self.llm.max_output_tokens,
            json_reasks=self.llm.json_reasks,
            batch_cues=self.llm.batch_cues,
            taxonomy=taxonomy,
        )


def load_score_table(path: str | Path) -> dict[tuple[str, str], float]:
    """Read a table-backend score file.

    Format: JSON list of {"source", "target", "score"} objects. Duplicate
    (source, target) pairs are rejected.
    """
    try:
        payload = json.loads(Path(path).read_text("utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read score table {path}: {exc}") from None
    if not isinstance(payload, list):
        raise ConfigError("score table must be a JSON list of {source, target, score}")
    table: dict[tuple[str, str], float] = {}
    for entry in payload:
        try:
            key = (str(entry["source"]), str(entry["target"]))
            score = float(entry["score"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"malformed score table entry {entry!r}: {exc}") from None
        if key in table:
            raise ConfigError(f"duplicate score table pair: {key!r}")
        table[key] = score
    return table
