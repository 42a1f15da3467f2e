"""Scorer implementations and their declared scales.

One model per process. The fake scorer exists so the wire protocol can
be conformance-tested without model weights or a GPU; real backbones are
loaded lazily behind optional imports.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Protocol, Sequence


@dataclass(frozen=True)
class Scale:
    name: str
    raw_min: float
    raw_max: float
    higher_is_better: bool

    def as_dict(self) -> dict:
        return {
            "name": self.name,
            "raw_min": self.raw_min,
            "raw_max": self.raw_max,
            "higher_is_better": self.higher_is_better,
        }


COMETKIWI_SCALE = Scale("cometkiwi", 0.0, 1.0, True)
METRICX_SCALE = Scale("metricx", 0.0, 25.0, False)


def family_scale(model: str) -> Scale:
    """Declared scale for a model family; the config invariant is that the
    served scale always matches the loaded weights."""
    lowered = model.lower()
    if "metricx" in lowered:
        return METRICX_SCALE
    return COMETKIWI_SCALE


@dataclass
class ServiceConfig:
    model: str = "fake"
    device: str = "cpu"
    port: int = 8900
    host: str = "127.0.0.1"
    batch_limit: int = 32
    fake: bool = False
    scale: Scale = field(default=None)  # defaults to the model family's scale

    def __post_init__(self):
        if self.scale is None:
            self.scale = family_scale(self.model)
        if self.batch_limit < 1:
            raise ValueError("batch_limit must be >= 1")
        if not self.fake and self.scale != family_scale(self.model):
            raise ValueError(
                f"declared scale {self.scale.name!r} does not match the "
                f"{self.model!r} model family ({family_scale(self.model).name!r})"
            )


class Scorer(Protocol):
    scale: Scale
    model: str

    def score(self, source: str, target: str) -> float: ...

    def score_batch(self, pairs: Sequence[tuple[str, str]]) -> list[float]: ...


class FakeScorer:
    """Deterministic hash-based scorer for protocol conformance testing.

    The score is a pure function of (source, target), always inside the
    declared raw range.
    """

    def __init__(self, scale: Scale = COMETKIWI_SCALE, model: str = "fake"):
        self.scale = scale
        self.model = model

    def score(self, source: str, target: str) -> float:
        digest = hashlib.sha256(f"{source}\x00{target}".encode("utf-8")).digest()
        fraction = int.from_bytes(digest[:8], "big") / float(1 << 64)
        return self.scale.raw_min + fraction * (self.scale.raw_max - self.scale.raw_min)

    def score_batch(self, pairs: Sequence[tuple[str, str]]) -> list[float]:
        return [self.score(s, t) for s, t in pairs]


class CometKiwiScorer:
    """COMETKiwi-family backbone via the `unbabel-comet` package."""

    def __init__(self, model: str, device: str = "cpu"):
        try:
            from comet import download_model, load_from_checkpoint
        except ImportError as exc:
            raise RuntimeError(
                "COMETKiwi scoring needs the optional dependency: "
                "pip install 'qe-sidecar[comet]'"
            ) from exc
        self.model = model
        self.scale = COMETKIWI_SCALE
        self._device = device
        self._model = load_from_checkpoint(download_model(model))
        self._model.eval()

    def score(self, source: str, target: str) -> float:
        return self.score_batch([(source, target)])[0]

    def score_batch(self, pairs: Sequence[tuple[str, str]]) -> list[float]:
        data = [{"src": source, "mt": target} for source, target in pairs]
        gpus = 0 if self._device == "cpu" else 1
        output = self._model.predict(data, batch_size=len(data), gpus=gpus, progress_bar=False)
        return [float(s) for s in output.scores]


def load_scorer(config: ServiceConfig) -> Scorer:
    if config.fake:
        return FakeScorer(config.scale, model=config.model if config.model != "fake" else "fake")
    if "metricx" in config.model.lower():
        raise RuntimeError(
            "MetricX models need the upstream metricx runtime, which is not "
            "bundled; run with --fake for protocol testing or serve a "
            "COMETKiwi checkpoint"
        )
    return CometKiwiScorer(config.model, config.device)
