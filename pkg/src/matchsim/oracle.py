"""Brute-force ground truth for small explicit instances.

A matching is a per-doctor tuple of hospital indices, ``None`` meaning
unmatched. Every agent prefers any partner to none.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from typing import Sequence

from .errors import ContractViolation, InstanceTooLarge
from .prefs import ExplicitPreferences

MAX_HOSPITALS = 8
MAX_DOCTORS = 9

Matching = tuple  # tuple[int | None, ...], one entry per doctor


def _hospital_side(matching: Sequence[int | None], n: int) -> list[int | None]:
    holders: list[int | None] = [None] * n
    for d, h in enumerate(matching):
        if h is None:
            continue
        if not 0 <= h < n:
            raise ContractViolation(f"doctor {d + 1} matched to unknown hospital {h + 1}")
        if holders[h] is not None:
            raise ContractViolation(f"hospital {h + 1} matched to doctors {holders[h] + 1} and {d + 1}")
        holders[h] = d
    return holders


def blocking_pairs(matching: Sequence[int | None], prefs: ExplicitPreferences) -> list[tuple[int, int]]:
    """All (doctor, hospital) pairs that prefer each other to their partners."""
    if len(matching) != prefs.m:
        raise ContractViolation(f"matching covers {len(matching)} doctors, instance has {prefs.m}")
    holders = _hospital_side(matching, prefs.n)
    d_rank = prefs.doctor_rank_table
    h_rank = prefs.hospital_rank_table
    unmatched_d = prefs.n + 1
    unmatched_h = prefs.m + 1
    pairs = []
    for d, current in enumerate(matching):
        mine = d_rank[d][current] if current is not None else unmatched_d
        for h in prefs.doctor_lists[d]:
            if d_rank[d][h] >= mine:
                break
            held = holders[h]
            theirs = h_rank[h][held] if held is not None else unmatched_h
            if h_rank[h][d] < theirs:
                pairs.append((d, h))
    pairs.sort()
    return pairs


def is_stable(matching: Sequence[int | None], prefs: ExplicitPreferences) -> bool:
    return not blocking_pairs(matching, prefs)


@dataclass
class StableSet:
    """Every stable matching of one instance, with best/worst partner tables."""

    instance: ExplicitPreferences
    matchings: list[Matching]
    doctor_best: list[int | None] = field(default_factory=list)
    doctor_worst: list[int | None] = field(default_factory=list)
    hospital_best: list[int | None] = field(default_factory=list)
    hospital_worst: list[int | None] = field(default_factory=list)

    def __len__(self):
        return len(self.matchings)

    @property
    def doctor_optimal(self) -> Matching:
        return tuple(self.doctor_best)

    @property
    def doctor_pessimal(self) -> Matching:
        return tuple(self.doctor_worst)

    @property
    def hospital_optimal(self) -> list[int | None]:
        """Per-hospital partners in the hospital-optimal matching."""
        return list(self.hospital_best)


def _check_guard(prefs: ExplicitPreferences) -> None:
    if prefs.n > MAX_HOSPITALS or prefs.m > MAX_DOCTORS:
        raise InstanceTooLarge(
            f"enumeration is limited to n <= {MAX_HOSPITALS}, m <= {MAX_DOCTORS}; "
            f"got n={prefs.n}, m={prefs.m}"
        )


def enumerate_stable(prefs: ExplicitPreferences) -> StableSet:
    """Enumerate stable matchings by recursion over doctors' choices.

    A pair is tested as soon as both of its members have a fixed partner;
    pairs involving a still-unassigned hospital are tested at the leaf.
    """
    _check_guard(prefs)
    n, m = prefs.n, prefs.m
    d_rank = prefs.doctor_rank_table
    h_rank = prefs.hospital_rank_table
    none_d = n + 1
    choice: list[int | None] = [None] * m
    holder: list[int | None] = [None] * n
    found: list[Matching] = []

    def d_val(d):
        h = choice[d]
        return none_d if h is None else d_rank[d][h]

    def consistent(d: int) -> bool:
        # pairs between doctor d and hospitals taken by earlier doctors
        mine = d_val(d)
        for e in range(d):
            h = choice[e]
            if h is not None and d_rank[d][h] < mine and h_rank[h][d] < h_rank[h][e]:
                return False
        # pairs between earlier doctors and d's hospital
        h = choice[d]
        if h is not None:
            for e in range(d):
                if d_rank[e][h] < d_val(e) and h_rank[h][e] < h_rank[h][d]:
                    return False
        return True

    def leaf_ok() -> bool:
        for h in range(n):
            if holder[h] is None:
                for d in range(m):
                    if d_rank[d][h] < d_val(d):
                        return False
        return True

    def recurse(d: int) -> None:
        if d == m:
            if leaf_ok():
                found.append(tuple(choice))
            return
        for h in list(range(n)) + [None]:
            if h is not None and holder[h] is not None:
                continue
            choice[d] = h
            if h is not None:
                holder[h] = d
            if consistent(d):
                recurse(d + 1)
            if h is not None:
                holder[h] = None
        choice[d] = None

    recurse(0)
    stable = StableSet(prefs, found)
    _fill_extremes(stable)
    return stable


def _best(options, rank_row):
    matched = [x for x in options if x is not None]
    if not matched:
        return None, None
    return min(matched, key=rank_row.__getitem__), max(matched, key=rank_row.__getitem__)


def _fill_extremes(stable: StableSet) -> None:
    prefs = stable.instance
    per_hospital = [_hospital_side(mu, prefs.n) for mu in stable.matchings]
    stable.doctor_best, stable.doctor_worst = [], []
    for d in range(prefs.m):
        best, worst = _best([mu[d] for mu in stable.matchings], prefs.doctor_rank_table[d])
        stable.doctor_best.append(best)
        stable.doctor_worst.append(worst)
    stable.hospital_best, stable.hospital_worst = [], []
    for h in range(prefs.n):
        best, worst = _best([hs[h] for hs in per_hospital], prefs.hospital_rank_table[h])
        stable.hospital_best.append(best)
        stable.hospital_worst.append(worst)


@dataclass
class LatticeReport:
    ok: bool
    checked_pairs: int
    violations: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"ok": self.ok, "checked_pairs": self.checked_pairs, "violations": self.violations}


def _weakly_prefers(rank_row, a, b, unmatched) -> bool:
    ra = unmatched if a is None else rank_row[a]
    rb = unmatched if b is None else rank_row[b]
    return ra <= rb


def _pointwise(a: Matching, b: Matching, d_rank, unmatched: int, pick) -> Matching:
    def key(d):
        return lambda h: unmatched if h is None else d_rank[d][h]

    return tuple(pick(a[d], b[d], key=key(d)) for d in range(len(a)))


def _fmt(mu: Matching) -> str:
    return "[" + ",".join("0" if h is None else str(h + 1) for h in mu) + "]"


def check_lattice(stable: StableSet) -> LatticeReport:
    """Check opposition of interests, extremes, meet/join closure and rural hospitals."""
    prefs = stable.instance
    d_rank, h_rank = prefs.doctor_rank_table, prefs.hospital_rank_table
    mus = stable.matchings
    members = set(mus)
    sides = {mu: _hospital_side(mu, prefs.n) for mu in mus}
    violations: list[str] = []

    if not mus:
        violations.append("no stable matching found")
        return LatticeReport(False, 0, violations)

    def doctors_prefer(a, b):
        return all(_weakly_prefers(d_rank[d], a[d], b[d], prefs.n + 1) for d in range(prefs.m))

    def hospitals_prefer(a, b):
        ha, hb = sides[a], sides[b]
        return all(_weakly_prefers(h_rank[h], ha[h], hb[h], prefs.m + 1) for h in range(prefs.n))

    pairs = 0
    for a, b in combinations(mus, 2):
        pairs += 1
        for x, y in ((a, b), (b, a)):
            if doctors_prefer(x, y) != hospitals_prefer(y, x):
                violations.append(f"opposition fails for {_fmt(x)} vs {_fmt(y)}")
        join = _pointwise(a, b, d_rank, prefs.n + 1, min)
        meet = _pointwise(a, b, d_rank, prefs.n + 1, max)
        if join not in members:
            violations.append(f"join of {_fmt(a)} and {_fmt(b)} is not stable: {_fmt(join)}")
        if meet not in members:
            violations.append(f"meet of {_fmt(a)} and {_fmt(b)} is not stable: {_fmt(meet)}")

    if stable.doctor_optimal not in members:
        violations.append(f"doctor-best map {_fmt(stable.doctor_optimal)} is not a stable matching")
    if stable.doctor_pessimal not in members:
        violations.append(f"doctor-worst map {_fmt(stable.doctor_pessimal)} is not a stable matching")
    elif _hospital_side(stable.doctor_pessimal, prefs.n) != list(stable.hospital_best):
        violations.append("doctor-worst matching does not give every hospital its best partner")
    if stable.doctor_optimal in members and sides[stable.doctor_optimal] != list(stable.hospital_worst):
        violations.append("doctor-best matching does not give every hospital its worst partner")

    matched_sets = {frozenset(d for d, h in enumerate(mu) if h is not None) for mu in mus}
    if len(matched_sets) > 1:
        violations.append("the set of matched doctors differs between stable matchings")

    return LatticeReport(not violations, pairs, violations)
