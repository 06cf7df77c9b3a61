"""Statistics over run outcomes and the reference quantities they are judged by.

All logarithms are natural.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import NamedTuple, Sequence

from .engine import DAOutcome
from .errors import ContractViolation
from .prefs import ExplicitPreferences


@dataclass(frozen=True)
class RankSummary:
    n: int
    m: int
    proposer_side: str
    mean_doctor_rank: float | None
    mean_hospital_rank: float | None
    unmatched_doctors: int
    unmatched_hospitals: int
    total_proposals: int
    seed: tuple[int, int] | None = None


def _mean_matched(ranks: Sequence[int | None]) -> tuple[float | None, int]:
    matched = [r for r in ranks if r is not None]
    unmatched = len(ranks) - len(matched)
    if not matched:
        return None, unmatched
    return math.fsum(matched) / len(matched), unmatched


def summarize(outcome: DAOutcome, seed: tuple[int, int] | None = None) -> RankSummary:
    """Mean partner ranks over matched agents; unmatched agents are only counted."""
    doc_mean, doc_unmatched = _mean_matched(outcome.doctor_rank)
    hosp_mean, hosp_unmatched = _mean_matched(outcome.hospital_rank)
    return RankSummary(
        n=outcome.n,
        m=outcome.m,
        proposer_side=outcome.proposer_side,
        mean_doctor_rank=doc_mean,
        mean_hospital_rank=hosp_mean,
        unmatched_doctors=doc_unmatched,
        unmatched_hospitals=hosp_unmatched,
        total_proposals=outcome.total_proposals,
        seed=seed,
    )


@dataclass(frozen=True)
class Thresholds:
    """Popularity, liking and budget thresholds for a market with n hospitals.

    ``a`` only scales the proposal budget; it defaults to 1 so the budget is
    a usable number of proposals at simulation sizes.
    """

    n: int
    c: float = 18.0
    a: float = 1.0

    def __post_init__(self):
        if self.n < 2:
            raise ContractViolation("thresholds need n >= 2 (log n must be positive)")
        if self.c <= 0 or self.a <= 0:
            raise ContractViolation("c and a must be positive")

    @property
    def log_n(self) -> float:
        return math.log(self.n)

    @property
    def k(self) -> int:
        """Proposals a hospital needs to count as popular."""
        return math.floor(self.n / (5 * self.c * self.log_n))

    @property
    def ell(self) -> int:
        """Proposal-budget scale."""
        return math.floor(self.n**2 / (self.a * self.c * self.log_n))

    @property
    def like_depth(self) -> int:
        return math.floor(self.c * self.log_n)

    @property
    def popular_target(self) -> int:
        return math.floor(self.c * self.log_n / 4)

    @property
    def like_floor(self) -> float:
        """Minimum like count every doctor is expected to clear."""
        return self.c * self.log_n / 2


def count_likes(prefs: ExplicitPreferences, depth: int) -> list[int]:
    """For each doctor, how many hospitals rank them within the top ``depth``."""
    if not 0 <= depth <= prefs.m:
        raise ContractViolation(f"depth must lie in [0, {prefs.m}], got {depth}")
    counts = [0] * prefs.m
    for row in prefs.hospital_lists:
        for d in row[:depth]:
            counts[d] += 1
    return counts


@dataclass(frozen=True)
class ReceptionHistogram:
    counts: dict[int, int]
    at_least_k: int | None
    at_most_low: int | None

    @property
    def mass(self) -> int:
        return sum(received * hospitals for received, hospitals in self.counts.items())


def reception_histogram(outcome: DAOutcome, k: int | None = None, low: int | None = None) -> ReceptionHistogram:
    """Exact histogram {proposals received: number of receivers}."""
    received = outcome.proposals_received
    return ReceptionHistogram(
        counts=dict(sorted(Counter(received).items())),
        at_least_k=None if k is None else sum(1 for c in received if c >= k),
        at_most_low=None if low is None else sum(1 for c in received if c <= low),
    )


def phi(x: float) -> float:
    """(1 + x) log(1 + x) - x, infinite for x <= -1."""
    if x <= -1:
        return math.inf
    return (1 + x) * math.log1p(x) - x


class TailBound(NamedTuple):
    phi_form: float
    relaxed: float


def _check_tail_args(mean: float, t: float) -> None:
    if mean <= 0 or t < 0:
        raise ContractViolation(f"need mean > 0 and t >= 0, got mean={mean}, t={t}")


def chernoff_upper(mean: float, t: float) -> TailBound:
    """Bounds on P(X >= mean + t) for a sum of independent Bernoullis."""
    _check_tail_args(mean, t)
    return TailBound(
        math.exp(-mean * phi(t / mean)),
        math.exp(-(t * t) / (2 * (mean + t / 3))),
    )


def chernoff_lower(mean: float, t: float) -> TailBound:
    """Bounds on P(X <= mean - t)."""
    _check_tail_args(mean, t)
    return TailBound(
        math.exp(-mean * phi(-t / mean)),
        math.exp(-(t * t) / (2 * mean)),
    )


def reference_curves(n: float) -> dict[str, float]:
    """Order-of-magnitude references; no constant factors are implied."""
    if n < 2:
        raise ContractViolation("reference curves need n >= 2")
    log_n = math.log(n)
    return {
        "balanced_doctor": log_n,
        "balanced_hospital": n / log_n,
        "coupon_proposals": n * log_n,
    }


def mean_and_se(values: Sequence[float]) -> tuple[float, float]:
    """Sample mean and its standard error (0 for a single value)."""
    if not values:
        raise ContractViolation("no values to average")
    mean = math.fsum(values) / len(values)
    if len(values) == 1:
        return mean, 0.0
    var = math.fsum((v - mean) ** 2 for v in values) / (len(values) - 1)
    return mean, math.sqrt(var / len(values))
