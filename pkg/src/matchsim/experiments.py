"""Multi-trial experiments: rank sweeps and DA-versus-oracle campaigns.

Trial ``i`` of a sweep always uses stream ``(master_seed, i)``, and rows are
aggregated in trial order, so results do not depend on how many worker
processes ran them.
"""

from __future__ import annotations

import csv
import io
import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from typing import Iterable, Sequence

from .analysis import RankSummary, Thresholds, mean_and_se, summarize
from .engine import MarketConfig, StopRule, run_da
from .errors import ContractViolation
from .oracle import blocking_pairs, check_lattice, enumerate_stable
from .prefs import ExplicitPreferences, sample_explicit
from .rng import SeedSpec, derive_stream

THREADS_ENV = "MATCHSIM_THREADS"


def worker_count(requested: int | None = None) -> int:
    cap = os.cpu_count() or 1
    env = os.environ.get(THREADS_ENV)
    if env:
        cap = min(cap, max(1, int(env)))
    if requested is not None:
        cap = min(cap, max(1, requested))
    return cap


@dataclass(frozen=True)
class SweepSpec:
    n_values: tuple[int, ...]
    imbalance: int = 1
    trials: int = 20
    proposer_side: str = "doctors"
    seed: int = 0
    out: str | None = None
    format: str = "csv"

    def __post_init__(self):
        if self.trials < 1:
            raise ContractViolation("trials must be >= 1")
        if not self.n_values:
            raise ContractViolation("n_values must not be empty")
        if self.format not in ("csv", "json"):
            raise ContractViolation("format must be csv or json")
        for n in self.n_values:
            if n < 1 or n + self.imbalance < 1:
                raise ContractViolation(f"n={n} with imbalance {self.imbalance} gives an empty side")


@dataclass(frozen=True)
class SweepRow:
    n: int
    m: int
    side: str
    trials: int
    mean_doc_rank: float
    se_doc: float
    mean_hosp_rank: float
    se_hosp: float
    mean_proposals: float
    unmatched: float


SWEEP_COLUMNS = tuple(f.name for f in fields(SweepRow))


def run_trial(n: int, m: int, side: str, master_seed: int, trial: int) -> RankSummary:
    seed = SeedSpec(master_seed, trial)
    outcome = run_da(MarketConfig(n, m, seed=seed, proposer_side=side))
    return summarize(outcome, seed=(seed.master_seed, seed.stream_id))


def _trial_args(args: tuple) -> RankSummary:
    return run_trial(*args)


def run_trials(
    n: int, m: int, side: str, master_seed: int, trials: int, workers: int | None = None
) -> list[RankSummary]:
    """Per-trial summaries in trial order."""
    jobs = [(n, m, side, master_seed, t) for t in range(trials)]
    count = worker_count(workers)
    if count <= 1 or trials <= 1:
        return [_trial_args(job) for job in jobs]
    with ProcessPoolExecutor(max_workers=count) as pool:
        return list(pool.map(_trial_args, jobs))


def aggregate(summaries: Sequence[RankSummary]) -> SweepRow:
    first = summaries[0]
    doc_mean, doc_se = mean_and_se([s.mean_doctor_rank for s in summaries])
    hosp_mean, hosp_se = mean_and_se([s.mean_hospital_rank for s in summaries])
    proposals, _ = mean_and_se([s.total_proposals for s in summaries])
    unmatched, _ = mean_and_se([s.unmatched_doctors + s.unmatched_hospitals for s in summaries])
    return SweepRow(
        n=first.n,
        m=first.m,
        side=first.proposer_side,
        trials=len(summaries),
        mean_doc_rank=doc_mean,
        se_doc=doc_se,
        mean_hosp_rank=hosp_mean,
        se_hosp=hosp_se,
        mean_proposals=proposals,
        unmatched=unmatched,
    )


def run_sweep(spec: SweepSpec, workers: int | None = None) -> list[SweepRow]:
    rows = []
    for n in sorted(set(spec.n_values)):
        summaries = run_trials(n, n + spec.imbalance, spec.proposer_side, spec.seed, spec.trials, workers)
        rows.append(aggregate(summaries))
    rows.sort(key=lambda r: (r.n, r.side))
    return rows


def rows_to_text(rows: Iterable[SweepRow], fmt: str = "csv") -> str:
    rows = list(rows)
    if fmt == "json":
        return json.dumps([asdict(r) for r in rows], indent=2) + "\n"
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(SWEEP_COLUMNS)
    for r in rows:
        writer.writerow([repr(v) if isinstance(v, float) else v for v in asdict(r).values()])
    return buf.getvalue()


def rows_from_text(text: str, fmt: str = "csv") -> list[SweepRow]:
    if fmt == "json":
        return [SweepRow(**item) for item in json.loads(text)]
    reader = csv.DictReader(io.StringIO(text))
    if tuple(reader.fieldnames or ()) != SWEEP_COLUMNS:
        raise ContractViolation(f"sweep CSV header must be {','.join(SWEEP_COLUMNS)}")
    out = []
    for rec in reader:
        out.append(
            SweepRow(
                n=int(rec["n"]),
                m=int(rec["m"]),
                side=rec["side"],
                trials=int(rec["trials"]),
                **{k: float(rec[k]) for k in SWEEP_COLUMNS[4:]},
            )
        )
    return out


@dataclass
class Mismatch:
    trial: int
    instance: ExplicitPreferences
    problem: str


@dataclass
class VerifyReport:
    count: int
    checked: int = 0
    stable_matchings: int = 0
    mismatches: list[Mismatch] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.mismatches


def random_dimensions(stream, max_n: int, max_m: int) -> tuple[int, int]:
    """Sizes for one campaign instance; about half are balanced."""
    n = 1 + stream.uniform_below(max_n)
    if stream.uniform_below(2) == 0 and n <= max_m:
        return n, n
    return n, 1 + stream.uniform_below(max_m)


def check_instance(prefs: ExplicitPreferences) -> tuple[list[str], int]:
    """Compare both DA variants with brute-force enumeration on one instance."""
    problems = []
    stable = enumerate_stable(prefs)
    by_doctors = run_da(MarketConfig(prefs.n, prefs.m, explicit=prefs))
    by_hospitals = run_da(MarketConfig(prefs.n, prefs.m, explicit=prefs, proposer_side="hospitals"))
    if by_doctors.matching() != stable.doctor_optimal:
        problems.append(
            f"doctor-proposal DA gave {by_doctors.doctor_partner}, "
            f"doctor-optimal is {list(stable.doctor_optimal)}"
        )
    if by_hospitals.hospital_partner != stable.hospital_optimal:
        problems.append(
            f"hospital-proposal DA gave {by_hospitals.hospital_partner}, "
            f"hospital-optimal is {stable.hospital_optimal}"
        )
    for outcome in (by_doctors, by_hospitals):
        pairs = blocking_pairs(outcome.matching(), prefs)
        if pairs:
            problems.append(f"{outcome.proposer_side}-proposal DA output has blocking pairs {pairs}")
    report = check_lattice(stable)
    problems.extend(report.violations)
    return problems, len(stable)


def verify_campaign(count: int, max_n: int, max_m: int | None = None, seed: int = 0) -> VerifyReport:
    max_m = max_n if max_m is None else max_m
    if count < 1 or max_n < 1 or max_m < 1:
        raise ContractViolation("count, max_n and max_m must be positive")
    report = VerifyReport(count)
    for trial in range(count):
        stream = derive_stream(SeedSpec(seed, trial))
        n, m = random_dimensions(stream, max_n, max_m)
        prefs = sample_explicit(n, m, stream)
        problems, found = check_instance(prefs)
        report.checked += 1
        report.stable_matchings += found
        if problems:
            report.mismatches.append(Mismatch(trial, prefs, "; ".join(problems)))
    return report


def corrupted_matching(prefs: ExplicitPreferences) -> tuple[tuple, list[tuple[int, int]]]:
    """A perturbed DA matching that is guaranteed to have a blocking pair."""
    base = list(run_da(MarketConfig(prefs.n, prefs.m, explicit=prefs)).doctor_partner)
    for a in range(prefs.m):
        for b in range(a + 1, prefs.m):
            trial = base.copy()
            trial[a], trial[b] = trial[b], trial[a]
            pairs = blocking_pairs(trial, prefs)
            if pairs:
                return tuple(trial), pairs
    # a lone matched pair split apart always blocks
    victim = next(d for d, h in enumerate(base) if h is not None)
    base[victim] = None
    return tuple(base), blocking_pairs(base, prefs)


def popular_stop_config(n: int, m: int, seed: SeedSpec, c: float = 18.0) -> MarketConfig:
    """Doctor-proposal run that halts once enough hospitals become popular."""
    th = Thresholds(n, c=c)
    if th.k < 1:
        raise ContractViolation(f"popularity threshold is 0 at n={n}; the stop rule needs n larger")
    return MarketConfig(n, m, seed=seed, stop_rule=StopRule.popular(th.k, th.popular_target))
