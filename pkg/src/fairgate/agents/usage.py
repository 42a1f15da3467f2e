"""Token/cost accounting for LLM calls.

The ledger is an append-only, thread-safe accumulator; cost totals are
always recomputed from token counts and the configured per-1k rates so
reports stay deterministic regardless of call completion order.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass
from typing import Iterable


@dataclass(frozen=True)
class Pricing:
    """USD per 1000 tokens, input and output priced separately."""

    input_per_1k: float
    output_per_1k: float

    def __post_init__(self):
        if self.input_per_1k < 0 or self.output_per_1k < 0:
            raise ValueError("pricing rates must be non-negative")

    def input_cost(self, tokens: int) -> float:
        return tokens / 1000.0 * self.input_per_1k

    def output_cost(self, tokens: int) -> float:
        return tokens / 1000.0 * self.output_per_1k


@dataclass(frozen=True)
class UsageRecord:
    """Usage of one (or an aggregate of) chat completion call(s)."""

    input_tokens: int
    output_tokens: int
    calls: int = 1
    input_cost: float = 0.0
    output_cost: float = 0.0
    agent: str | None = None

    def __post_init__(self):
        if min(self.input_tokens, self.output_tokens, self.calls) < 0:
            raise ValueError("token and call counts must be non-negative")
        if self.input_cost < 0 or self.output_cost < 0:
            raise ValueError("costs must be non-negative")

    @property
    def total_cost(self) -> float:
        return self.input_cost + self.output_cost

    @classmethod
    def from_tokens(
        cls,
        input_tokens: int,
        output_tokens: int,
        *,
        pricing: Pricing | None = None,
        agent: str | None = None,
        calls: int = 1,
    ) -> "UsageRecord":
        input_cost = pricing.input_cost(input_tokens) if pricing else 0.0
        output_cost = pricing.output_cost(output_tokens) if pricing else 0.0
        return cls(input_tokens, output_tokens, calls, input_cost, output_cost, agent)


class UsageLedger:
    """Thread-safe append-only collection of usage records."""

    def __init__(self):
        self._lock = threading.Lock()
        self._records: list[UsageRecord] = []

    def add(self, record: UsageRecord) -> None:
        with self._lock:
            self._records.append(record)

    def records(self) -> tuple[UsageRecord, ...]:
        with self._lock:
            return tuple(self._records)

    @property
    def total_calls(self) -> int:
        return sum(r.calls for r in self.records())

    def totals(self) -> dict:
        """Order-independent integer totals plus a per-agent breakdown."""
        records = self.records()
        by_agent: dict[str, dict[str, int]] = {}
        for r in records:
            tag = r.agent or "untagged"
            slot = by_agent.setdefault(tag, {"calls": 0, "input_tokens": 0, "output_tokens": 0})
            slot["calls"] += r.calls
            slot["input_tokens"] += r.input_tokens
            slot["output_tokens"] += r.output_tokens
        return {
            "calls": sum(r.calls for r in records),
            "input_tokens": sum(r.input_tokens for r in records),
            "output_tokens": sum(r.output_tokens for r in records),
            "by_agent": {k: by_agent[k] for k in sorted(by_agent)},
        }


@dataclass(frozen=True)
class CostReport:
    calls: int
    input_tokens: int
    output_tokens: int
    input_cost: float
    output_cost: float
    num_samples: int | None = None

    @property
    def total_tokens(self) -> int:
        return self.input_tokens + self.output_tokens

    @property
    def total_cost(self) -> float:
        return self.input_cost + self.output_cost

    @property
    def avg_tokens_per_sample(self) -> float | None:
        if not self.num_samples:
            return None
        return self.total_tokens / self.num_samples

    @property
    def avg_cost_per_sample(self) -> float | None:
        if not self.num_samples:
            return None
        return self.total_cost / self.num_samples

    def as_dict(self) -> dict:
        payload = {
            "calls": self.calls,
            "input_tokens": self.input_tokens,
            "output_tokens": self.output_tokens,
            "total_tokens": self.total_tokens,
            "input_cost": self.input_cost,
            "output_cost": self.output_cost,
            "total_cost": self.total_cost,
        }
        if self.num_samples:
            payload["num_samples"] = self.num_samples
            payload["avg_tokens_per_sample"] = self.avg_tokens_per_sample
            payload["avg_cost_per_sample"] = self.avg_cost_per_sample
        return payload

    def format_table(self) -> str:
        rows = [
            ("Total API calls", f"{self.calls}"),
            ("Input tokens", f"{self.input_tokens:,}"),
            ("Output tokens", f"{self.output_tokens:,}"),
            ("Total tokens", f"{self.total_tokens:,}"),
            ("Input cost ($)", f"{self.input_cost:.4f}"),
            ("Output cost ($)", f"{self.output_cost:.4f}"),
            ("Total cost ($)", f"{self.total_cost:.4f}"),
        ]
        if self.num_samples:
            rows.append(("Avg. tokens / sample", f"{self.avg_tokens_per_sample:.1f}"))
            rows.append(("Avg. cost / sample ($)", f"{self.avg_cost_per_sample:.5f}"))
        width = max(len(name) for name, _ in rows)
        return "\n".join(f"{name:<{width}}  {value}" for name, value in rows)


def cost_report(
    records: "Iterable[UsageRecord] | UsageLedger",
    pricing: Pricing,
    num_samples: int | None = None,
) -> CostReport:
    """Aggregate a ledger into totals and per-sample averages.

    Costs are recomputed from the summed token counts and ``pricing``,
    not from per-record cost fields.
    """
    if isinstance(records, UsageLedger):
        records = records.records()
    records = list(records)
    calls = sum(r.calls for r in records)
    input_tokens = sum(r.input_tokens for r in records)
    output_tokens = sum(r.output_tokens for r in records)
    return CostReport(
        calls=calls,
        input_tokens=input_tokens,
        output_tokens=output_tokens,
        input_cost=pricing.input_cost(input_tokens),
        output_cost=pricing.output_cost(output_tokens),
        num_samples=num_samples,
    )
