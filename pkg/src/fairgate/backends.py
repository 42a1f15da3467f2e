"""Pluggable quantitative QE scorer.

The backbone is a black box behind a small interface: a remote HTTP
sidecar speaking the /v1/score protocol for real models, plus two
deterministic in-process scorers (table and constant) so everything else
can be tested without GPUs. Raw scores are normalized onto the canonical
scale before any bias arithmetic.
"""

from __future__ import annotations

import threading
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Mapping, Sequence

import httpx

from .errors import BackendError
from .taxonomy import CanonicalScore, SCALES, ScoreScale, UNIT_SCALE, normalize_score


@dataclass(frozen=True)
class ScoreRequest:
    source: str
    target: str
    language_pair: str | None = None

    def __post_init__(self):
        if not self.source or not self.target:
            raise ValueError("score request needs non-empty source and target")


@dataclass(frozen=True)
class ScoreBundle:
    """All backbone scores for one sample plus the optional reasoning score."""

    q_orig: CanonicalScore
    variant_scores: tuple = ()  # tuple of (Variant, CanonicalScore), in VariantSet order
    q_uqe: CanonicalScore | None = None


class QeBackend(ABC):
    """Scores (source, target) pairs on its declared raw scale."""

    scale: ScoreScale

    @abstractmethod
    def score(self, request: ScoreRequest) -> CanonicalScore:
        raise NotImplementedError

    def score_batch(self, requests: Sequence[ScoreRequest]) -> list[CanonicalScore]:
        """Positionally aligned with the input; all-or-nothing on failure."""
        if not requests:
            raise ValueError("score_batch requires a non-empty request list")
        return [self.score(r) for r in requests]

    def describe(self) -> dict:
        return {"kind": type(self).__name__, "scale": self.scale.name}


class ConstantBackend(QeBackend):
    """Returns the same canonical score for every pair (test double)."""

    def __init__(self, value: float = 0.5):
        self.scale = UNIT_SCALE
        self._value = CanonicalScore(value)

    def score(self, request: ScoreRequest) -> CanonicalScore:
        return self._value

    def describe(self) -> dict:
        return {"kind": "constant", "scale": self.scale.name, "value": float(self._value)}


class TableBackend(QeBackend):
    """Scores looked up from an explicit (source, target) -> raw table."""

    def __init__(self, table: Mapping[tuple[str, str], float], scale: ScoreScale = UNIT_SCALE):
        self.scale = scale
        self._table = dict(table)

    def score(self, request: ScoreRequest) -> CanonicalScore:
        key = (request.source, request.target)
        if key not in self._table:
            raise BackendError(f"no table entry for pair {key!r}")
        return normalize_score(self._table[key], self.scale)

    def describe(self) -> dict:
        return {"kind": "table", "scale": self.scale.name, "entries": len(self._table)}


def table_mock_scorer(
    table: Mapping[tuple[str, str], float], scale: ScoreScale = UNIT_SCALE
) -> TableBackend:
    return TableBackend(table, scale)


class RemoteBackend(QeBackend):
    """Client for the JSON-over-HTTP scoring sidecar.

    The response's declared scale drives normalization; when
    ``expected_scale`` is set a mismatching sidecar is rejected instead
    of silently mis-normalizing. In-flight requests are bounded.
    """

    def __init__(
        self,
        base_url: str,
        *,
        expected_scale: str | None = None,
        timeout: float = 30.0,
        max_inflight: int = 8,
        client: httpx.Client | None = None,
    ):
        self.base_url = base_url.rstrip("/")
        self.expected_scale = expected_scale
        self._semaphore = threading.Semaphore(max(1, max_inflight))
        self._client = client or httpx.Client(timeout=timeout)
        # Placeholder until the first response declares the real scale.
        self.scale = SCALES.get(expected_scale or "", UNIT_SCALE)

    def _post(self, path: str, payload: dict) -> dict:
        try:
            with self._semaphore:
                response = self._client.post(f"{self.base_url}{path}", json=payload)
        except httpx.HTTPError as exc:
            raise BackendError(f"QE backend unreachable at {self.base_url}: {exc}") from exc
        if response.status_code != 200:
            raise BackendError(
                f"QE backend returned {response.status_code} for {path}: {response.text[:300]}"
            )
        try:
            return response.json()
        except ValueError as exc:
            raise BackendError(f"QE backend sent non-JSON body for {path}") from exc

    def _parse_scale(self, payload: dict) -> ScoreScale:
        try:
            scale = ScoreScale.from_dict(payload["scale"])
        except (KeyError, TypeError, ValueError) as exc:
            raise BackendError(f"QE backend response missing a valid scale: {exc}") from exc
        if self.expected_scale is not None and scale.name != self.expected_scale:
            raise BackendError(
                f"QE backend declares scale {scale.name!r}, expected {self.expected_scale!r}"
            )
        self.scale = scale
        return scale

    def score(self, request: ScoreRequest) -> CanonicalScore:
        body = self._post(
            "/v1/score",
            {
                "source": request.source,
                "target": request.target,
                "language_pair": request.language_pair,
            },
        )
        scale = self._parse_scale(body)
        if "score" not in body or not isinstance(body["score"], (int, float)):
            raise BackendError(f"QE backend response missing numeric score: {body!r}")
        return normalize_score(float(body["score"]), scale)

    def score_batch(self, requests: Sequence[ScoreRequest]) -> list[CanonicalScore]:
        if not requests:
            raise ValueError("score_batch requires a non-empty request list")
        body = self._post(
            "/v1/score_batch",
            {
                "items": [
                    {"source": r.source, "target": r.target, "language_pair": r.language_pair}
                    for r in requests
                ]
            },
        )
        scale = self._parse_scale(body)
        scores = body.get("scores")
        if not isinstance(scores, list) or len(scores) != len(requests):
            raise BackendError(
                f"QE backend batch response has {len(scores) if isinstance(scores, list) else 'no'} "
                f"scores for {len(requests)} items"
            )
        return [normalize_score(float(s), scale) for s in scores]

    def health(self) -> dict:
        try:
            response = self._client.get(f"{self.base_url}/healthz")
        except httpx.HTTPError as exc:
            raise BackendError(f"QE backend unreachable at {self.base_url}: {exc}") from exc
        if response.status_code != 200:
            raise BackendError(f"QE backend unhealthy: {response.status_code}")
        return response.json()

    def describe(self) -> dict:
        return {"kind": "remote", "endpoint": self.base_url, "scale": self.scale.name}
