"""Command-line entry point: ``matchsim {run,sweep,verify,enumerate}``."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .engine import MarketConfig, StopRule, events_to_csv, run_da
from .errors import ContractViolation, InstanceTooLarge
from .experiments import (
    SweepSpec,
    corrupted_matching,
    rows_to_text,
    run_sweep,
    verify_campaign,
)
from .oracle import MAX_DOCTORS, MAX_HOSPITALS, check_lattice, enumerate_stable
from .prefs import load_instance, sample_explicit
from .rng import SeedSpec, derive_stream, entropy_seed


def _u64(text: str) -> int:
    value = int(text)
    if not 0 <= value < 1 << 64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def _positive(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return value


def _stop_rule(text: str) -> StopRule:
    try:
        return StopRule.parse(text)
    except ContractViolation as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _n_list(text: str) -> tuple[int, ...]:
    try:
        values = tuple(int(tok) for tok in text.split(",") if tok.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None
    if not values or min(values) < 1:
        raise argparse.ArgumentTypeError("sweep sizes must be positive")
    return values


def _resolve_seed(seed: int | None) -> int:
    if seed is None:
        seed = entropy_seed()
        print(f"seed: {seed}", file=sys.stderr)
    return seed


def _emit(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
        return
    try:
        Path(out).write_text(text)
    except OSError as exc:
        raise SystemExit(f"cannot write {out}: {exc.strerror}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="matchsim", description="Deferred-acceptance market simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run deferred acceptance once and print the outcome as JSON")
    run.add_argument("--n", type=_positive, help="number of hospitals")
    run.add_argument("--m", type=_positive, help="number of doctors (default n + 1)")
    run.add_argument("--side", choices=("doctors", "hospitals"), default="doctors")
    run.add_argument("--seed", type=_u64)
    run.add_argument("--stop", type=_stop_rule, default=StopRule(), help="none | popular:K:P | budget:L")
    run.add_argument("--events", action="store_true", help="keep the full proposal log")
    run.add_argument("--explicit", action="store_true", help="sample full lists up front")
    run.add_argument("--input", help="explicit instance file (implies --explicit)")
    run.add_argument("--two-phase-k", type=_positive, dest="two_phase_k")
    run.add_argument("--scheduling", choices=("queue", "stack"), default="queue")
    run.add_argument("--out")
    run.add_argument("--format", choices=("json", "csv"), default="json",
                     help="csv prints the event log (needs --events)")

    sweep = sub.add_parser("sweep", help="mean ranks over many trials for several market sizes")
    sweep.add_argument("--sweep", type=_n_list, required=True, help='e.g. "500,1000,2000,4000"')
    sweep.add_argument("--imbalance", type=int, default=1, help="m - n (default 1)")
    sweep.add_argument("--trials", type=_positive, default=20)
    sweep.add_argument("--side", choices=("doctors", "hospitals"), default="doctors")
    sweep.add_argument("--seed", type=_u64)
    sweep.add_argument("--out")
    sweep.add_argument("--format", choices=("csv", "json"), default="csv")

    verify = sub.add_parser("verify", help="check DA against brute-force enumeration")
    verify.add_argument("--count", type=_positive, default=1000)
    verify.add_argument("--max-n", type=_positive, default=6, dest="max_n")
    verify.add_argument("--max-m", type=_positive, default=None, dest="max_m")
    verify.add_argument("--seed", type=_u64)
    verify.add_argument("--self-test", action="store_true", dest="self_test",
                        help="inject a corrupted matching; must fail")

    enum = sub.add_parser("enumerate", help="list every stable matching of an instance")
    enum.add_argument("--input", required=True)
    enum.add_argument("--out")
    return parser


def cmd_run(args) -> int:
    if args.input:
        try:
            prefs = load_instance(args.input)
        except OSError as exc:
            raise SystemExit(f"cannot read {args.input}: {exc.strerror}")
        n, m = prefs.n, prefs.m
        seed = SeedSpec(args.seed or 0)
    else:
        if args.n is None:
            raise SystemExit("run needs --n or --input")
        n = args.n
        m = args.m if args.m is not None else n + 1
        seed = SeedSpec(_resolve_seed(args.seed))
        prefs = sample_explicit(n, m, derive_stream(seed)) if args.explicit else None
    config = MarketConfig(
        n,
        m,
        seed=seed,
        proposer_side=args.side,
        scheduling=args.scheduling,
        stop_rule=args.stop,
        explicit=prefs,
        two_phase_k=args.two_phase_k,
        record_events=args.events,
    )
    outcome = run_da(config)
    if args.format == "csv":
        if not args.events:
            raise SystemExit("--format csv prints the event log; add --events")
        _emit(events_to_csv(outcome.event_log), args.out)
    else:
        _emit(outcome.to_json() + "\n", args.out)
    return 0


def cmd_sweep(args) -> int:
    spec = SweepSpec(
        n_values=args.sweep,
        imbalance=args.imbalance,
        trials=args.trials,
        proposer_side=args.side,
        seed=_resolve_seed(args.seed),
        out=args.out,
        format=args.format,
    )
    rows = run_sweep(spec)
    _emit(rows_to_text(rows, spec.format), spec.out)
    return 0


def cmd_verify(args) -> int:
    max_m = args.max_m if args.max_m is not None else args.max_n
    if args.max_n > MAX_HOSPITALS or max_m > MAX_DOCTORS:
        raise SystemExit(f"size bounds exceed the enumeration guard (n <= {MAX_HOSPITALS}, m <= {MAX_DOCTORS})")
    seed = _resolve_seed(args.seed)
    if args.self_test:
        stream = derive_stream(SeedSpec(seed, 0))
        prefs = sample_explicit(args.max_n, max_m, stream)
        matching, pairs = corrupted_matching(prefs)
        print("self-test: corrupted matching " + " ".join(str(0 if h is None else h + 1) for h in matching))
        for d, h in pairs:
            print(f"blocking pair: doctor {d + 1}, hospital {h + 1}")
        print("instance:")
        print(prefs.to_text(), end="")
        print("FAIL")
        return 1
    report = verify_campaign(args.count, args.max_n, max_m, seed)
    for miss in report.mismatches:
        print(f"mismatch in instance {miss.trial}: {miss.problem}")
        print(miss.instance.to_text(), end="")
    status = "PASS" if report.ok else "FAIL"
    print(f"{status}: {report.checked} instances, {report.stable_matchings} stable matchings, "
          f"{len(report.mismatches)} mismatches")
    return 0 if report.ok else 1


def cmd_enumerate(args) -> int:
    try:
        prefs = load_instance(args.input)
    except OSError as exc:
        raise SystemExit(f"cannot read {args.input}: {exc.strerror}")
    try:
        stable = enumerate_stable(prefs)
    except InstanceTooLarge as exc:
        raise SystemExit(str(exc))

    def one_based(xs):
        return [0 if x is None else x + 1 for x in xs]

    payload = {
        "n": prefs.n,
        "m": prefs.m,
        "count": len(stable),
        "matchings": [one_based(mu) for mu in stable.matchings],
        "doctor_best": one_based(stable.doctor_best),
        "doctor_worst": one_based(stable.doctor_worst),
        "hospital_best": one_based(stable.hospital_best),
        "hospital_worst": one_based(stable.hospital_worst),
        "lattice": check_lattice(stable).to_dict(),
    }
    _emit(json.dumps(payload, indent=2) + "\n", args.out)
    return 0


COMMANDS = {"run": cmd_run, "sweep": cmd_sweep, "verify": cmd_verify, "enumerate": cmd_enumerate}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except ContractViolation as exc:
        parser.error(str(exc))


if __name__ == "__main__":
    sys.exit(main())
