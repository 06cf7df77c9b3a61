"""Deferred acceptance with lazy or explicit preferences.

The loop is written once in proposer/receiver terms. Doctor-proposal runs
map doctors to proposers; hospital-proposal runs transpose the market.
Outcomes are always reported in doctor/hospital terms.
"""

from __future__ import annotations

import csv
import io
import json
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Sequence

from .errors import ContractViolation, IntegrityError
from .prefs import ExplicitMarket, ExplicitPreferences, LazyMarket
from .rng import SeedSpec, derive_stream

SIDES = ("doctors", "hospitals")
SCHEDULES = ("queue", "stack")

CONVERGED = "converged"
POPULAR_TARGET_HIT = "popular_target_hit"
BUDGET_EXHAUSTED = "budget_exhausted"

ACCEPTED_FREE = "accepted-free"
ACCEPTED_DISPLACING = "accepted-displacing"
REJECTED = "rejected"


@dataclass(frozen=True)
class StopRule:
    kind: str = "none"
    popular_threshold: int | None = None
    target: int | None = None
    budget: int | None = None

    def __post_init__(self):
        if self.kind == "none":
            return
        if self.kind == "popular_count":
            if not (self.popular_threshold or 0) >= 1 or not (self.target or 0) >= 1:
                raise ContractViolation("popular_count needs threshold >= 1 and target >= 1")
        elif self.kind == "proposal_budget":
            if self.budget is None or self.budget < 0:
                raise ContractViolation("proposal_budget needs budget >= 0")
        else:
            raise ContractViolation(f"unknown stop rule kind {self.kind!r}")

    @classmethod
    def popular(cls, threshold: int, target: int) -> "StopRule":
        return cls("popular_count", popular_threshold=threshold, target=target)

    @classmethod
    def proposals(cls, budget: int) -> "StopRule":
        return cls("proposal_budget", budget=budget)

    @classmethod
    def parse(cls, text: str) -> "StopRule":
        """Parse ``none``, ``popular:K:P`` or ``budget:L``."""
        parts = text.split(":")
        try:
            if parts == ["none"]:
                return cls()
            if parts[0] == "popular" and len(parts) == 3:
                return cls.popular(int(parts[1]), int(parts[2]))
            if parts[0] == "budget" and len(parts) == 2:
                return cls.proposals(int(parts[1]))
        except ValueError:
            pass
        raise ContractViolation(f"bad stop rule {text!r}; expected none, popular:K:P or budget:L")

    def __str__(self):
        if self.kind == "popular_count":
            return f"popular:{self.popular_threshold}:{self.target}"
        if self.kind == "proposal_budget":
            return f"budget:{self.budget}"
        return "none"


@dataclass(frozen=True)
class MarketConfig:
    """Everything needed to reproduce one run.

    ``n`` counts hospitals and ``m`` doctors. ``explicit`` switches from lazy
    sampling to fixed lists. ``track_k`` picks the popularity threshold used
    for the timeline; it defaults to the stop rule's threshold, else 1.
    """

    n: int
    m: int
    seed: SeedSpec = field(default_factory=lambda: SeedSpec(0))
    proposer_side: str = "doctors"
    scheduling: str = "queue"
    stop_rule: StopRule = field(default_factory=StopRule)
    explicit: ExplicitPreferences | None = None
    two_phase_k: int | None = None
    track_k: int | None = None
    record_events: bool = False

    def __post_init__(self):
        if self.n < 1 or self.m < 1:
            raise ContractViolation(f"market needs n >= 1 and m >= 1, got n={self.n}, m={self.m}")
        if self.proposer_side not in SIDES:
            raise ContractViolation(f"proposer_side must be one of {SIDES}")
        if self.scheduling not in SCHEDULES:
            raise ContractViolation(f"scheduling must be one of {SCHEDULES}")
        if self.explicit is not None:
            if (self.explicit.n, self.explicit.m) != (self.n, self.m):
                raise ContractViolation("explicit preferences do not match (n, m)")
            if self.two_phase_k is not None:
                raise ContractViolation("two-phase rank sampling only applies to lazy markets")
        if self.two_phase_k is not None:
            receivers_rank = self.m if self.proposer_side == "doctors" else self.n
            if not 1 <= self.two_phase_k <= receivers_rank:
                raise ContractViolation(f"two_phase_k must lie in [1, {receivers_rank}]")
        if self.track_k is not None:
            if self.track_k < 1:
                raise ContractViolation("track_k must be >= 1")
            rule = self.stop_rule
            if rule.kind == "popular_count" and rule.popular_threshold != self.track_k:
                raise ContractViolation("track_k conflicts with the popular_count stop threshold")

    @property
    def num_proposers(self) -> int:
        return self.m if self.proposer_side == "doctors" else self.n

    @property
    def num_receivers(self) -> int:
        return self.n if self.proposer_side == "doctors" else self.m

    @property
    def popularity_k(self) -> int:
        if self.track_k is not None:
            return self.track_k
        if self.stop_rule.kind == "popular_count":
            return self.stop_rule.popular_threshold
        return 1

    def build_market(self) -> LazyMarket | ExplicitMarket:
        if self.explicit is not None:
            return ExplicitMarket(self.explicit, self.proposer_side)
        return LazyMarket(
            self.num_proposers,
            self.num_receivers,
            derive_stream(self.seed),
            self.proposer_side,
            self.two_phase_k,
        )


@dataclass(frozen=True)
class ProposalEvent:
    index: int
    proposer: int
    receiver: int
    receiver_rank_of_proposer: int
    result: str
    displaced: int | None = None


@dataclass
class DAOutcome:
    """Result of one run.

    ``proposals_made`` is indexed by the proposing side and
    ``proposals_received`` by the receiving side. Partners and ranks are
    ``None`` for unmatched agents.
    """

    n: int
    m: int
    proposer_side: str
    doctor_partner: list[int | None]
    hospital_partner: list[int | None]
    doctor_rank: list[int | None]
    hospital_rank: list[int | None]
    proposals_made: list[int]
    proposals_received: list[int]
    total_proposals: int
    stop_reason: str
    popular_k: int
    popular_timeline: list[tuple[int, int]]
    event_log: list[ProposalEvent] | None = None

    def matching(self) -> tuple[int | None, ...]:
        """Per-doctor partner tuple, the form the oracle works with."""
        return tuple(self.doctor_partner)

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "m": self.m,
            "proposer_side": self.proposer_side,
            "matching": {
                "doctors": [0 if h is None else h + 1 for h in self.doctor_partner],
                "hospitals": [0 if d is None else d + 1 for d in self.hospital_partner],
            },
            "doctor_rank": self.doctor_rank,
            "hospital_rank": self.hospital_rank,
            "proposals_made": self.proposals_made,
            "proposals_received": self.proposals_received,
            "total_proposals": self.total_proposals,
            "stop_reason": self.stop_reason,
            "popular_k": self.popular_k,
            "popular_timeline": [list(pair) for pair in self.popular_timeline],
            "event_log": None
            if self.event_log is None
            else [_event_row(e) for e in self.event_log],
        }

    def to_json(self, indent: int | None = None) -> str:
        return json.dumps(self.to_dict(), indent=indent)

    @classmethod
    def from_dict(cls, data: dict) -> "DAOutcome":
        def unpack(xs):
            return [None if x == 0 else x - 1 for x in xs]

        events = data.get("event_log")
        return cls(
            n=data["n"],
            m=data["m"],
            proposer_side=data["proposer_side"],
            doctor_partner=unpack(data["matching"]["doctors"]),
            hospital_partner=unpack(data["matching"]["hospitals"]),
            doctor_rank=list(data["doctor_rank"]),
            hospital_rank=list(data["hospital_rank"]),
            proposals_made=list(data["proposals_made"]),
            proposals_received=list(data["proposals_received"]),
            total_proposals=data["total_proposals"],
            stop_reason=data["stop_reason"],
            popular_k=data["popular_k"],
            popular_timeline=[tuple(p) for p in data["popular_timeline"]],
            event_log=None if events is None else [_event_from_row(r) for r in events],
        )


EVENT_COLUMNS = ("index", "proposer", "receiver", "rank", "result", "displaced")


def _event_row(e: ProposalEvent) -> list:
    return [
        e.index,
        e.proposer + 1,
        e.receiver + 1,
        e.receiver_rank_of_proposer,
        e.result,
        0 if e.displaced is None else e.displaced + 1,
    ]


def _event_from_row(row: Sequence) -> ProposalEvent:
    index, proposer, receiver, rank, result, displaced = row
    displaced = int(displaced) if displaced not in ("", None) else 0
    return ProposalEvent(
        int(index),
        int(proposer) - 1,
        int(receiver) - 1,
        int(rank),
        str(result),
        None if displaced == 0 else displaced - 1,
    )


def events_to_csv(events: Sequence[ProposalEvent]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(EVENT_COLUMNS)
    writer.writerows(_event_row(e) for e in events)
    return buf.getvalue()


def events_from_csv(text: str) -> list[ProposalEvent]:
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if header is None or tuple(header) != EVENT_COLUMNS:
        raise ContractViolation(f"event CSV header must be {','.join(EVENT_COLUMNS)}")
    return [_event_from_row(row) for row in reader if row]


def _propose_loop(
    config: MarketConfig,
    next_receiver: Callable[[int], int],
    rank_of: Callable[[int, int], int],
    budget: int | None,
    record_events: bool,
) -> DAOutcome:
    num_p = config.num_proposers
    num_r = config.num_receivers
    rule = config.stop_rule
    if rule.kind == "proposal_budget":
        budget = rule.budget if budget is None else min(budget, rule.budget)
    target = rule.target if rule.kind == "popular_count" else None
    track_k = config.popularity_k

    made = [0] * num_p
    received = [0] * num_r
    holder = [-1] * num_r
    holder_rank = [0] * num_r
    timeline: list[tuple[int, int]] = []
    events: list[ProposalEvent] | None = [] if record_events else None
    popular = 0
    total = 0
    reason = CONVERGED

    if config.scheduling == "queue":
        free = deque(range(num_p))
        take = free.popleft
        put_back = free.appendleft
    else:
        free = deque(reversed(range(num_p)))
        take = free.pop
        put_back = free.append
    push = free.append

    while free:
        p = take()
        if made[p] == num_r:
            # rejected by every receiver: stays unmatched
            continue
        if budget is not None and total >= budget:
            put_back(p)
            reason = BUDGET_EXHAUSTED
            break
        r = next_receiver(p)
        made[p] += 1
        total += 1
        rank = rank_of(r, p)
        count = received[r] + 1
        received[r] = count
        if count == track_k:
            popular += 1
            timeline.append((total, popular))
        current = holder[r]
        if current < 0:
            holder[r] = p
            holder_rank[r] = rank
            if events is not None:
                events.append(ProposalEvent(total, p, r, rank, ACCEPTED_FREE))
        elif rank < holder_rank[r]:
            holder[r] = p
            holder_rank[r] = rank
            push(current)
            if events is not None:
                events.append(ProposalEvent(total, p, r, rank, ACCEPTED_DISPLACING, current))
        else:
            push(p)
            if events is not None:
                events.append(ProposalEvent(total, p, r, rank, REJECTED))
        if target is not None and popular >= target and count == track_k:
            if any(made[q] < num_r for q in free):
                reason = POPULAR_TARGET_HIT
            break

    partner = [-1] * num_p
    for r, p in enumerate(holder):
        if p >= 0:
            partner[p] = r
    proposer_rank = [made[p] if partner[p] >= 0 else None for p in range(num_p)]
    receiver_rank = [holder_rank[r] if holder[r] >= 0 else None for r in range(num_r)]
    proposer_partner = [r if r >= 0 else None for r in partner]
    receiver_partner = [p if p >= 0 else None for p in holder]

    if config.proposer_side == "doctors":
        doctor_partner, hospital_partner = proposer_partner, receiver_partner
        doctor_rank, hospital_rank = proposer_rank, receiver_rank
    else:
        doctor_partner, hospital_partner = receiver_partner, proposer_partner
        doctor_rank, hospital_rank = receiver_rank, proposer_rank

    return DAOutcome(
        n=config.n,
        m=config.m,
        proposer_side=config.proposer_side,
        doctor_partner=doctor_partner,
        hospital_partner=hospital_partner,
        doctor_rank=doctor_rank,
        hospital_rank=hospital_rank,
        proposals_made=made,
        proposals_received=received,
        total_proposals=total,
        stop_reason=reason,
        popular_k=track_k,
        popular_timeline=timeline,
        event_log=events,
    )


class DeferredAcceptance:
    """One run of deferred acceptance; keeps the market for later inspection."""

    def __init__(self, config: MarketConfig):
        self.config = config
        self.market = config.build_market()
        self.outcome: DAOutcome | None = None

    def run(self) -> DAOutcome:
        if self.outcome is not None:
            raise ContractViolation("this run has already been executed")
        self.outcome = _propose_loop(
            self.config,
            self.market.next_receiver,
            self.market.rank,
            None,
            self.config.record_events,
        )
        return self.outcome


def run_da(config: MarketConfig) -> DAOutcome:
    return DeferredAcceptance(config).run()


def popular_count(received: Sequence[int] | DAOutcome, k: int) -> int:
    """Number of receivers holding at least k proposals."""
    if k < 1:
        raise ContractViolation("k must be >= 1")
    if isinstance(received, DAOutcome):
        received = received.proposals_received
    return sum(1 for c in received if c >= k)


def popular_trajectory(events: Sequence[ProposalEvent], num_receivers: int, k: int) -> list[int]:
    """Popular-receiver count after each event of a log."""
    if k < 1:
        raise ContractViolation("k must be >= 1")
    received = [0] * num_receivers
    count = 0
    out = []
    for e in events:
        received[e.receiver] += 1
        if received[e.receiver] == k:
            count += 1
        out.append(count)
    return out


def replay(events: Sequence[ProposalEvent], config: MarketConfig) -> DAOutcome:
    """Rebuild an outcome from an event log, checking it against the config.

    The config's own market is consulted in lockstep, so a log that came from
    a different seed, size or instance raises :class:`IntegrityError`. A
    truncated log yields the outcome at that prefix.
    """
    market = config.build_market()
    cursor = iter(events)
    pending: list[ProposalEvent] = []
    seen = 0

    def next_receiver(p: int) -> int:
        nonlocal seen
        event = next(cursor)
        seen += 1
        if event.index != seen:
            raise IntegrityError(f"event {seen} carries index {event.index}")
        if event.proposer != p:
            raise IntegrityError(
                f"event {seen}: log says proposer {event.proposer + 1}, schedule gives {p + 1}"
            )
        expected = market.next_receiver(p)
        if event.receiver != expected:
            raise IntegrityError(
                f"event {seen}: log says receiver {event.receiver + 1}, market gives {expected + 1}"
            )
        pending.append(event)
        return expected

    def rank_of(r: int, p: int) -> int:
        event = pending.pop()
        expected = market.rank(r, p)
        if event.receiver_rank_of_proposer != expected:
            raise IntegrityError(
                f"event {event.index}: log says rank {event.receiver_rank_of_proposer}, "
                f"market gives {expected}"
            )
        return expected

    outcome = _propose_loop(config, next_receiver, rank_of, len(events), True)
    if outcome.total_proposals != len(events):
        raise IntegrityError(
            f"run stopped after {outcome.total_proposals} proposals but the log has {len(events)}"
        )
    for mine, theirs in zip(outcome.event_log, events):
        if mine != theirs:
            raise IntegrityError(f"event {theirs.index} diverges: log {theirs}, replay {mine}")
    if not config.record_events:
        outcome.event_log = None
    return outcome
