"""Preference oracles: explicit lists for small instances, lazy ones for large.

Lazy oracles reveal a preference entry only when the deferred-acceptance
process first asks for it. A doctor's list is the output of a partial
Fisher-Yates shuffle run one step per proposal; a hospital's opinion of a
doctor is an absolute rank drawn when that doctor first proposes.

Indices are 0-based internally. Ranks are 1-based (1 is most preferred).
"""

from __future__ import annotations

from array import array
from bisect import bisect_left
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable, Sequence

from .errors import ContractViolation, ExhaustedError
from .rng import Stream


class LazyPermutationState:
    """A uniform random permutation of ``range(domain_size)``, revealed in order.

    The displacement map records the swaps of a partial Fisher-Yates shuffle.
    It is kept as two parallel sorted ``array('i')`` columns (position,
    element) rather than a dict, which keeps the footprint near 8 bytes per
    live swap.
    """

    __slots__ = ("domain_size", "consumed", "_keys", "_vals", "_revealed")

    def __init__(self, domain_size: int, keep_revealed: bool = True):
        if domain_size < 1:
            raise ContractViolation(f"domain_size must be positive, got {domain_size}")
        self.domain_size = domain_size
        self.consumed = 0
        self._keys = array("i")
        self._vals = array("i")
        self._revealed = array("i") if keep_revealed else None

    def next_choice(self, stream: Stream) -> int:
        i = self.consumed
        if i >= self.domain_size:
            raise ExhaustedError(f"all {self.domain_size} elements already revealed")
        j = i + stream.uniform_below(self.domain_size - i)
        keys = self._keys
        vals = self._vals
        p = bisect_left(keys, j)
        hit = p < len(keys) and keys[p] == j
        out = vals[p] if hit else j
        if j != i:
            # every live key is >= i, so position i can only sit at index 0
            has_i = len(keys) > 0 and keys[0] == i
            at_i = vals[0] if has_i else i
            if hit:
                vals[p] = at_i
            else:
                keys.insert(p, j)
                vals.insert(p, at_i)
            if has_i:
                del keys[0]
                del vals[0]
        elif hit:
            del keys[p]
            del vals[p]
        self.consumed = i + 1
        if self._revealed is not None:
            self._revealed.append(out)
        return out

    @property
    def revealed(self) -> tuple[int, ...]:
        if self._revealed is None:
            raise ContractViolation("state was built with keep_revealed=False")
        return tuple(self._revealed)

    @property
    def displacement_map(self) -> dict[int, int]:
        return dict(zip(self._keys, self._vals))

    def __repr__(self):
        return f"LazyPermutationState(domain_size={self.domain_size}, consumed={self.consumed})"


def next_choice(state: LazyPermutationState, stream: Stream) -> int:
    return state.next_choice(stream)


class HospitalRankState:
    """Lazily assigned absolute ranks of proposers on one receiver's list.

    One-phase mode draws each new rank uniformly from the ranks not yet
    used. Two-phase mode fixes a reserved rank subset up front, serves ranks
    from it (uniformly) until it runs out, then serves the remaining ranks.
    Both modes realize the same uniform permutation law.
    """

    __slots__ = ("capacity", "reserved", "_sampler", "_outside", "_doctors", "_ranks")

    def __init__(self, capacity: int, reserved: Iterable[int] | None = None):
        if capacity < 1:
            raise ContractViolation(f"capacity must be positive, got {capacity}")
        self.capacity = capacity
        self._doctors = array("i")
        self._ranks = array("i")
        if reserved is None:
            self.reserved = None
            self._sampler = LazyPermutationState(capacity, keep_revealed=False)
            self._outside = None
            return
        reserved = list(reserved)
        chosen = sorted(set(reserved))
        if len(chosen) != len(reserved):
            raise ContractViolation("reserved ranks must be distinct")
        if not chosen or chosen[0] < 1 or chosen[-1] > capacity:
            raise ContractViolation(f"reserved ranks must be a non-empty subset of [1, {capacity}]")
        self.reserved = tuple(chosen)
        self._sampler = LazyPermutationState(len(chosen), keep_revealed=False)
        self._outside = (
            LazyPermutationState(capacity - len(chosen), keep_revealed=False)
            if len(chosen) < capacity
            else None
        )

    @classmethod
    def two_phase(cls, capacity: int, k: int, stream: Stream) -> "HospitalRankState":
        """Build a two-phase state whose reserved k-subset is drawn uniformly now."""
        if not 1 <= k <= capacity:
            raise ContractViolation(f"reserved set size must lie in [1, {capacity}], got {k}")
        picker = LazyPermutationState(capacity, keep_revealed=False)
        return cls(capacity, [picker.next_choice(stream) + 1 for _ in range(k)])

    @property
    def mode(self) -> str:
        return "one-phase" if self.reserved is None else "two-phase"

    @property
    def reserved_remaining(self) -> int:
        if self.reserved is None:
            return 0
        return len(self.reserved) - self._sampler.consumed

    def __len__(self):
        return len(self._doctors)

    def assign_rank(self, doctor: int, stream: Stream) -> int:
        doctors = self._doctors
        pos = bisect_left(doctors, doctor)
        if pos < len(doctors) and doctors[pos] == doctor:
            raise ContractViolation(f"doctor {doctor} already holds rank {self._ranks[pos]}")
        if len(doctors) >= self.capacity:
            raise ContractViolation("every rank has already been assigned")
        if self.reserved is None:
            rank = self._sampler.next_choice(stream) + 1
        elif self._sampler.consumed < self._sampler.domain_size:
            rank = self.reserved[self._sampler.next_choice(stream)]
        else:
            rank = self._complement_rank(self._outside.next_choice(stream))
        doctors.insert(pos, doctor)
        self._ranks.insert(pos, rank)
        return rank

    def _complement_rank(self, index: int) -> int:
        # index-th (0-based) rank in [1, capacity] that is not reserved
        rank = index + 1
        for r in self.reserved:
            if r <= rank:
                rank += 1
            else:
                break
        return rank

    def rank_of(self, doctor: int) -> int | None:
        pos = bisect_left(self._doctors, doctor)
        if pos < len(self._doctors) and self._doctors[pos] == doctor:
            return self._ranks[pos]
        return None

    def compare(self, d1: int, d2: int) -> int:
        """Return whichever of the two doctors holds the better (smaller) rank."""
        r1, r2 = self.rank_of(d1), self.rank_of(d2)
        if r1 is None or r2 is None:
            missing = d1 if r1 is None else d2
            raise ContractViolation(f"doctor {missing} has no assigned rank")
        return d1 if r1 <= r2 else d2

    @property
    def assigned(self) -> dict[int, int]:
        return dict(zip(self._doctors, self._ranks))


def assign_rank(state: HospitalRankState, doctor: int, stream: Stream) -> int:
    return state.assign_rank(doctor, stream)


def compare(state: HospitalRankState, d1: int, d2: int) -> int:
    return state.compare(d1, d2)


def _check_permutation(row: Sequence[int], size: int, what: str) -> None:
    if len(row) != size or sorted(row) != list(range(size)):
        raise ContractViolation(f"{what} is not a permutation of {size} partners: {list(row)}")


@dataclass(frozen=True)
class ExplicitPreferences:
    """Complete preference lists. ``doctor_lists[d]`` orders hospitals best first."""

    doctor_lists: tuple[tuple[int, ...], ...]
    hospital_lists: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        object.__setattr__(self, "doctor_lists", tuple(tuple(r) for r in self.doctor_lists))
        object.__setattr__(self, "hospital_lists", tuple(tuple(r) for r in self.hospital_lists))
        if not self.doctor_lists or not self.hospital_lists:
            raise ContractViolation("an instance needs at least one doctor and one hospital")
        for d, row in enumerate(self.doctor_lists):
            _check_permutation(row, self.n, f"doctor {d + 1} list")
        for h, row in enumerate(self.hospital_lists):
            _check_permutation(row, self.m, f"hospital {h + 1} list")

    @property
    def n(self) -> int:
        return len(self.hospital_lists)

    @property
    def m(self) -> int:
        return len(self.doctor_lists)

    @cached_property
    def doctor_rank_table(self) -> list[list[int]]:
        """``table[d][h]`` is the 1-based rank of hospital h on doctor d's list."""
        return [_inverse(row) for row in self.doctor_lists]

    @cached_property
    def hospital_rank_table(self) -> list[list[int]]:
        return [_inverse(row) for row in self.hospital_lists]

    def transposed(self) -> "ExplicitPreferences":
        """Swap the roles of doctors and hospitals."""
        return ExplicitPreferences(self.hospital_lists, self.doctor_lists)

    def to_text(self) -> str:
        lines = [f"{self.n} {self.m}"]
        for row in self.doctor_lists + self.hospital_lists:
            lines.append(" ".join(str(x + 1) for x in row))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "ExplicitPreferences":
        """Parse ``"n m"`` then m doctor lines and n hospital lines, 1-based."""
        rows = [line.split() for line in text.splitlines() if line.strip()]
        if not rows or len(rows[0]) != 2:
            raise ContractViolation("first line must be 'n m'")
        try:
            n, m = int(rows[0][0]), int(rows[0][1])
            body = [[int(tok) - 1 for tok in row] for row in rows[1:]]
        except ValueError as exc:
            raise ContractViolation(f"non-integer token in instance: {exc}") from None
        if n < 1 or m < 1:
            raise ContractViolation("n and m must be positive")
        if len(body) != m + n:
            raise ContractViolation(f"expected {m + n} preference lines, found {len(body)}")
        return cls(body[:m], body[m:])


def _inverse(row: Sequence[int]) -> list[int]:
    inv = [0] * len(row)
    for pos, x in enumerate(row):
        inv[x] = pos + 1
    return inv


def load_instance(path: str | Path) -> ExplicitPreferences:
    return ExplicitPreferences.from_text(Path(path).read_text())


def sample_explicit(n: int, m: int, stream: Stream) -> ExplicitPreferences:
    """Independent uniform lists: m doctor lists over n hospitals, then n hospital lists."""
    if n < 1 or m < 1:
        raise ContractViolation(f"n and m must be positive, got n={n}, m={m}")
    lists = []
    for size, count in ((n, m), (m, n)):
        for _ in range(count):
            row = list(range(size))
            stream.shuffle(row)
            lists.append(row)
    return ExplicitPreferences(lists[:m], lists[m:])


class LazyMarket:
    """Lazy oracles for one run, oriented proposer -> receiver."""

    def __init__(
        self,
        num_proposers: int,
        num_receivers: int,
        stream: Stream,
        proposer_side: str = "doctors",
        two_phase_k: int | None = None,
    ):
        self.proposer_side = proposer_side
        self.stream = stream
        self.proposer_lists = [LazyPermutationState(num_receivers) for _ in range(num_proposers)]
        if two_phase_k is None:
            self.receiver_ranks = [HospitalRankState(num_proposers) for _ in range(num_receivers)]
        else:
            self.receiver_ranks = [
                HospitalRankState.two_phase(num_proposers, two_phase_k, stream)
                for _ in range(num_receivers)
            ]

    def next_receiver(self, proposer: int) -> int:
        return self.proposer_lists[proposer].next_choice(self.stream)

    def rank(self, receiver: int, proposer: int) -> int:
        return self.receiver_ranks[receiver].assign_rank(proposer, self.stream)


class ExplicitMarket:
    """Explicit lists, oriented proposer -> receiver."""

    def __init__(self, prefs: ExplicitPreferences, proposer_side: str = "doctors"):
        self.prefs = prefs
        self.proposer_side = proposer_side
        oriented = prefs if proposer_side == "doctors" else prefs.transposed()
        self._lists = oriented.doctor_lists
        self._rank_table = oriented.hospital_rank_table
        self._cursor = [0] * len(self._lists)

    def next_receiver(self, proposer: int) -> int:
        pos = self._cursor[proposer]
        if pos >= len(self._lists[proposer]):
            raise ExhaustedError(f"proposer {proposer} has been rejected by everyone")
        self._cursor[proposer] = pos + 1
        return self._lists[proposer][pos]

    def rank(self, receiver: int, proposer: int) -> int:
        return self._rank_table[receiver][proposer]


@dataclass
class PartialPreferences:
    """The preference entries a lazy run actually revealed.

    ``doctor_entries[d]`` maps hospital -> 1-based rank on d's list, and
    ``hospital_entries[h]`` maps doctor -> rank. Absent keys are unknown.
    """

    n: int
    m: int
    doctor_entries: list[dict[int, int]] = field(default_factory=list)
    hospital_entries: list[dict[int, int]] = field(default_factory=list)

    def __len__(self):
        return sum(map(len, self.doctor_entries)) + sum(map(len, self.hospital_entries))

    def complete(self) -> ExplicitPreferences:
        """Fill unknown positions in index order, keeping every revealed entry."""
        return ExplicitPreferences(
            [_fill(entries, self.n) for entries in self.doctor_entries],
            [_fill(entries, self.m) for entries in self.hospital_entries],
        )

    def agrees_with(self, prefs: ExplicitPreferences) -> bool:
        for entries, table in (
            (self.doctor_entries, prefs.doctor_rank_table),
            (self.hospital_entries, prefs.hospital_rank_table),
        ):
            for agent, known in enumerate(entries):
                if any(table[agent][x] != r for x, r in known.items()):
                    return False
        return True


def _fill(entries: dict[int, int], size: int) -> list[int]:
    row: list[int | None] = [None] * size
    for partner, rank in entries.items():
        row[rank - 1] = partner
    rest = iter(x for x in range(size) if x not in entries)
    return [next(rest) if x is None else x for x in row]


def freeze(market: LazyMarket) -> PartialPreferences:
    """Snapshot everything a lazy market has revealed so far."""
    prop = [
        {r: pos + 1 for pos, r in enumerate(state.revealed)} for state in market.proposer_lists
    ]
    recv = [state.assigned for state in market.receiver_ranks]
    if market.proposer_side == "doctors":
        return PartialPreferences(len(recv), len(prop), prop, recv)
    return PartialPreferences(len(prop), len(recv), recv, prop)
