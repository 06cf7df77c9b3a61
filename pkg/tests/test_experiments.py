import math

import pytest

from matchsim import ExplicitPreferences, SeedSpec, derive_stream, sample_explicit
from matchsim.errors import ContractViolation
from matchsim.experiments import (
    SWEEP_COLUMNS,
    SweepSpec,
    check_instance,
    corrupted_matching,
    popular_stop_config,
    random_dimensions,
    rows_from_text,
    rows_to_text,
    run_sweep,
    run_trials,
    verify_campaign,
    worker_count,
)
from matchsim.oracle import blocking_pairs


def test_single_trial_single_agent():
    (row,) = run_sweep(SweepSpec(n_values=(1,), imbalance=0, trials=1, seed=5))
    assert (row.n, row.m, row.trials) == (1, 1, 1)
    assert row.mean_doc_rank == 1 and row.mean_hosp_rank == 1
    assert row.se_doc == 0 and row.unmatched == 0


def test_rows_sorted_by_n():
    rows = run_sweep(SweepSpec(n_values=(30, 10, 20), trials=3, seed=1))
    assert [r.n for r in rows] == [10, 20, 30]
    assert all(r.m == r.n + 1 and r.unmatched == 1 for r in rows)


@pytest.mark.parametrize("fmt", ["csv", "json"])
def test_sweep_text_round_trip(fmt):
    rows = run_sweep(SweepSpec(n_values=(15, 25), imbalance=3, trials=4, seed=9, proposer_side="hospitals"))
    text = rows_to_text(rows, fmt)
    assert rows_from_text(text, fmt) == rows
    if fmt == "csv":
        assert text.splitlines()[0] == ",".join(SWEEP_COLUMNS)


def test_bad_csv_header():
    with pytest.raises(ContractViolation):
        rows_from_text("n,m\n1,2\n")


def test_results_do_not_depend_on_worker_count():
    serial = run_trials(40, 41, "doctors", 77, 6, workers=1)
    pooled = run_trials(40, 41, "doctors", 77, 6, workers=2)
    assert serial == pooled


def test_worker_count_respects_env(monkeypatch):
    monkeypatch.setenv("MATCHSIM_THREADS", "1")
    assert worker_count() == 1
    monkeypatch.delenv("MATCHSIM_THREADS")
    assert worker_count(1) == 1


@pytest.mark.parametrize("kwargs", [
    dict(n_values=(), trials=1),
    dict(n_values=(5,), trials=0),
    dict(n_values=(5,), imbalance=-5),
    dict(n_values=(5,), format="xml"),
])
def test_invalid_sweep_spec(kwargs):
    with pytest.raises(ContractViolation):
        SweepSpec(**kwargs)


def test_random_dimensions_mix():
    stream = derive_stream(SeedSpec(3))
    dims = [random_dimensions(stream, 6, 6) for _ in range(2000)]
    balanced = sum(n == m for n, m in dims)
    assert all(1 <= n <= 6 and 1 <= m <= 6 for n, m in dims)
    # half forced balanced plus a 1/6 chance otherwise
    assert 1050 <= balanced <= 1280


def test_check_instance_clean():
    prefs = sample_explicit(5, 4, derive_stream(SeedSpec(12)))
    problems, count = check_instance(prefs)
    assert problems == [] and count >= 1


def test_small_campaign():
    report = verify_campaign(50, 4, seed=2)
    assert report.ok and report.checked == 50 and report.stable_matchings >= 50


def test_corrupted_matching_blocks():
    for seed in range(30):
        stream = derive_stream(SeedSpec(seed))
        prefs = sample_explicit(1 + seed % 4, 1 + seed % 5, stream)
        matching, pairs = corrupted_matching(prefs)
        assert pairs and pairs == blocking_pairs(matching, prefs)


def test_corrupted_single_pair():
    prefs = ExplicitPreferences([[0]], [[0]])
    matching, pairs = corrupted_matching(prefs)
    assert matching == (None,) and pairs == [(0, 0)]


def test_popular_stop_config():
    cfg = popular_stop_config(1000, 1001, SeedSpec(1))
    assert cfg.stop_rule.popular_threshold == 1 and cfg.stop_rule.target == 31
    with pytest.raises(ContractViolation):
        popular_stop_config(50, 51, SeedSpec(1))


@pytest.mark.slow
def test_balanced_sweep_band(sweep_row):
    row = sweep_row(2000, 0)
    assert 0.3 <= row.mean_doc_rank / math.log(2000) <= 3


@pytest.mark.slow
def test_unbalanced_sweep_band(sweep_row):
    row = sweep_row(2000, 1)
    assert 0.2 <= row.mean_doc_rank / (2000 / math.log(2000)) <= 5
    assert 0.2 <= row.mean_hosp_rank / math.log(2000) <= 5
