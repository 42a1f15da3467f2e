"""Canonical corpus schema and JSONL ingestion.

One sample object per line, keys: id, setting, source, targets,
language_pair, plus gold and system_id for MQM samples. Converters from
third-party datasets produce this format; the pipeline only ever sees
validated :class:`Corpus` objects.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Mapping

from .errors import CorpusError

log = logging.getLogger(__name__)


class Setting(str, Enum):
    AMB_FM = "amb_fm"
    AMB_NG = "amb_ng"
    EXPLICIT = "explicit"
    MQM = "mqm"


REQUIRED_ROLES: dict[Setting, tuple[str, ...]] = {
    Setting.AMB_FM: ("feminine", "masculine"),
    Setting.AMB_NG: ("neutral", "gendered"),
    Setting.EXPLICIT: ("correct", "incorrect"),
    Setting.MQM: ("hypothesis",),
}


@dataclass(frozen=True)
class Violation:
    field: str
    rule: str
    level: str  # "error" | "warning"
    message: str


@dataclass(frozen=True)
class CorpusSample:
    id: str
    setting: Setting
    source: str
    targets: Mapping[str, str]
    language_pair: str
    gold: float | None = None
    system_id: str | None = None

    def as_dict(self) -> dict:
        payload = {
            "id": self.id,
            "setting": self.setting.value,
            "source": self.source,
            "targets": dict(self.targets),
            "language_pair": self.language_pair,
        }
        if self.gold is not None:
            payload["gold"] = self.gold
        if self.system_id is not None:
            payload["system_id"] = self.system_id
        return payload


def validate_sample(sample: CorpusSample) -> list[Violation]:
    """Return all invariant violations; empty list means the sample is sound.

    Violations are data, not exceptions: loaders decide what is fatal
    (every "error"-level violation is).
    """
    violations: list[Violation] = []

    def error(field_name, rule, message):
        violations.append(Violation(field_name, rule, "error", message))

    def warning(field_name, rule, message):
        violations.append(Violation(field_name, rule, "warning", message))

    if not sample.id:
        error("id", "non-empty", "sample id must be non-empty")
    if not sample.source:
        error("source", "non-empty", "source must be non-empty")

    required = REQUIRED_ROLES[sample.setting]
    for role in required:
        text = sample.targets.get(role)
        if not text:
            error("targets", f"missing-role:{role}", f"setting {sample.setting.value} requires target role {role!r}")
    for role in sample.targets:
        if role not in required:
            warning("targets", f"unknown-role:{role}", f"role {role!r} is not used by setting {sample.setting.value}")

    if sample.setting is Setting.MQM:
        if sample.gold is None:
            error("gold", "missing-gold", "MQM samples must carry a gold human score")
        if not sample.system_id:
            error("system_id", "missing-system-id", "MQM samples must carry a system_id")
    else:
        if sample.gold is not None:
            error("gold", "unexpected-gold", f"setting {sample.setting.value} does not carry gold scores")
        if sample.system_id is not None:
            error("system_id", "unexpected-system-id", f"setting {sample.setting.value} does not carry system ids")

    if not sample.language_pair:
        error("language_pair", "non-empty", "language_pair must be non-empty")
    elif not sample.language_pair.lower().startswith("en-"):
        # The evaluated corpora are EN-*; other sources are accepted with a nudge.
        warning("language_pair", "non-en-source", f"language pair {sample.language_pair!r} is not EN-*")

    return violations


@dataclass
class Corpus:
    samples: tuple[CorpusSample, ...]
    setting: Setting | None
    metadata: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.samples)

    def by_id(self) -> dict[str, CorpusSample]:
        return {s.id: s for s in self.samples}

    def roles(self) -> tuple[str, ...]:
        return REQUIRED_ROLES[self.setting] if self.setting else ()


def _sample_from_dict(payload: dict, line: int) -> CorpusSample:
    if not isinstance(payload, dict):
        raise CorpusError("each line must be a JSON object", line)
    try:
        setting = Setting(str(payload["setting"]))
    except KeyError:
        raise CorpusError("missing required key 'setting'", line) from None
    except ValueError:
        raise CorpusError(
            f"unknown setting {payload.get('setting')!r}; expected one of "
            f"{[s.value for s in Setting]}",
            line,
        ) from None
    try:
        targets = payload["targets"]
        if not isinstance(targets, dict):
            raise CorpusError("'targets' must be an object mapping role to text", line)
        sample = CorpusSample(
            id=str(payload["id"]),
            setting=setting,
            source=str(payload["source"]),
            targets={str(k): str(v) for k, v in targets.items()},
            language_pair=str(payload.get("language_pair", "")),
            gold=float(payload["gold"]) if "gold" in payload and payload["gold"] is not None else None,
            system_id=str(payload["system_id"]) if payload.get("system_id") is not None else None,
        )
    except KeyError as exc:
        raise CorpusError(f"missing required key {exc.args[0]!r}", line) from None
    except (TypeError, ValueError) as exc:
        raise CorpusError(f"malformed sample: {exc}", line) from None
    return sample


def load_corpus(path: str | Path, expected_setting: Setting | str | None = None) -> Corpus:
    """Load and validate a JSONL corpus.

    Any error-level violation, duplicate id, non-uniform setting, or
    mismatch against ``expected_setting`` raises :class:`CorpusError`
    with the offending line number.
    """
    path = Path(path)
    if not path.exists():
        raise CorpusError(f"corpus file not found: {path}")
    if expected_setting is not None and not isinstance(expected_setting, Setting):
        expected_setting = Setting(str(expected_setting))

    samples: list[CorpusSample] = []
    seen_ids: set[str] = set()
    setting: Setting | None = None
    warning_count = 0

    with path.open("r", encoding="utf-8") as handle:
        for line_no, raw in enumerate(handle, start=1):
            raw = raw.strip()
            if not raw:
                continue
            try:
                payload = json.loads(raw)
            except json.JSONDecodeError as exc:
                raise CorpusError(f"invalid JSON ({exc.msg})", line_no) from None
            sample = _sample_from_dict(payload, line_no)

            if setting is None:
                setting = sample.setting
            elif sample.setting is not setting:
                raise CorpusError(
                    f"setting {sample.setting.value!r} differs from corpus setting {setting.value!r}",
                    line_no,
                )
            if expected_setting is not None and sample.setting is not expected_setting:
                raise CorpusError(
                    f"setting {sample.setting.value!r} does not match expected "
                    f"{expected_setting.value!r}",
                    line_no,
                )
            if sample.id in seen_ids:
                raise CorpusError(f"duplicate sample id {sample.id!r}", line_no)
            seen_ids.add(sample.id)

            for violation in validate_sample(sample):
                if violation.level == "error":
                    raise CorpusError(
                        f"field {violation.field!r} violates {violation.rule}: {violation.message}",
                        line_no,
                    )
                log.warning("line %d: %s", line_no, violation.message)
                warning_count += 1
            samples.append(sample)

    if setting is None:
        setting = expected_setting
    return Corpus(
        samples=tuple(samples),
        setting=setting,
        metadata={"path": str(path), "warnings": warning_count},
    )


def dump_corpus(corpus: Corpus, path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8") as handle:
        for sample in corpus.samples:
            handle.write(json.dumps(sample.as_dict(), ensure_ascii=False) + "\n")


def write_samples(samples: Iterable[CorpusSample], path: str | Path) -> None:
    setting = None
    samples = tuple(samples)
    if samples:
        setting = samples[0].setting
    dump_corpus(Corpus(samples, setting), path)
