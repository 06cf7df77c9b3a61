import json
import subprocess
import sys

import pytest

from matchsim.cli import main
from matchsim.engine import events_from_csv
from matchsim.experiments import rows_from_text

ALIGNED_TEXT = "2 2\n1 2\n1 2\n2 1\n1 2\n"
CYCLIC_TEXT = "2 2\n1 2\n2 1\n2 1\n1 2\n"


def run_cli(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_run_one_by_one(capsys):
    code, out, _ = run_cli(capsys, "run", "--n", "1", "--m", "1", "--seed", "7")
    assert code == 0
    data = json.loads(out)
    assert data["total_proposals"] == 1


def test_run_is_byte_identical(capsys):
    _, first, _ = run_cli(capsys, "run", "--n", "2000", "--m", "2001", "--seed", "7")
    _, second, _ = run_cli(capsys, "run", "--n", "2000", "--m", "2001", "--seed", "7")
    assert first == second


def test_run_from_instance_file(capsys, tmp_path):
    path = tmp_path / "aligned.txt"
    path.write_text(ALIGNED_TEXT)
    _, out, _ = run_cli(capsys, "run", "--input", str(path), "--explicit")
    data = json.loads(out)
    assert data["matching"]["doctors"] == [2, 1]
    assert data["total_proposals"] == 3


def test_run_without_seed_reports_one(capsys):
    _, out, err = run_cli(capsys, "run", "--n", "3")
    assert err.startswith("seed: ")
    assert json.loads(out)["m"] == 4


def test_run_csv_event_log(capsys, tmp_path):
    target = tmp_path / "events.csv"
    run_cli(capsys, "run", "--n", "20", "--seed", "1", "--events", "--format", "csv", "--out", str(target))
    events = events_from_csv(target.read_text())
    assert [e.index for e in events] == list(range(1, len(events) + 1))


def test_run_stop_and_side(capsys):
    _, out, _ = run_cli(capsys, "run", "--n", "50", "--seed", "1", "--stop", "budget:10", "--side", "hospitals")
    data = json.loads(out)
    assert data["total_proposals"] == 10 and data["proposer_side"] == "hospitals"


@pytest.mark.parametrize("argv", [
    ["run"],
    ["run", "--n", "0"],
    ["run", "--n", "3", "--seed", "-1"],
    ["run", "--n", "3", "--stop", "sometimes"],
    ["run", "--n", "3", "--side", "both"],
    ["run", "--n", "3", "--format", "csv"],
    ["run", "--n", "3", "--two-phase-k", "9"],
    ["sweep", "--sweep", "a,b"],
    ["sweep", "--sweep", "10", "--trials", "0"],
    ["verify", "--max-n", "12"],
    ["enumerate"],
    ["frobnicate"],
])
def test_invalid_invocations_fail(capsys, argv):
    with pytest.raises(SystemExit) as exc:
        main(argv)
    assert exc.value.code not in (0, None)


def test_sweep_csv_round_trip(capsys, tmp_path):
    target = tmp_path / "sweep.csv"
    run_cli(capsys, "sweep", "--sweep", "20,10", "--trials", "3", "--seed", "4", "--out", str(target))
    rows = rows_from_text(target.read_text())
    assert [r.n for r in rows] == [10, 20]
    _, again, _ = run_cli(capsys, "sweep", "--sweep", "10,20", "--trials", "3", "--seed", "4")
    assert again == target.read_text()


def test_sweep_single_row(capsys):
    _, out, _ = run_cli(capsys, "sweep", "--sweep", "1", "--imbalance", "0", "--trials", "1",
                        "--seed", "0", "--format", "json")
    (row,) = json.loads(out)
    assert row["mean_doc_rank"] == 1 and row["mean_hosp_rank"] == 1


def test_sweep_unwritable_path(capsys, tmp_path):
    with pytest.raises(SystemExit) as exc:
        main(["sweep", "--sweep", "2", "--trials", "1", "--seed", "0", "--out", str(tmp_path / "no" / "x.csv")])
    assert "no/x.csv" in str(exc.value.code)


def test_verify_campaign_passes(capsys):
    code, out, _ = run_cli(capsys, "verify", "--count", "1000", "--max-n", "6", "--seed", "1")
    assert code == 0 and out.startswith("PASS: 1000 instances")


def test_verify_trivial(capsys):
    code, out, _ = run_cli(capsys, "verify", "--count", "1", "--max-n", "1")
    assert code == 0 and "PASS" in out


def test_verify_self_test_fails(capsys):
    code, out, _ = run_cli(capsys, "verify", "--self-test", "--max-n", "3", "--seed", "2")
    assert code == 1
    assert "blocking pair: doctor" in out and out.rstrip().endswith("FAIL")


def test_enumerate(capsys, tmp_path):
    path = tmp_path / "cyclic.txt"
    path.write_text(CYCLIC_TEXT)
    _, out, _ = run_cli(capsys, "enumerate", "--input", str(path))
    data = json.loads(out)
    assert data["count"] == 2
    assert data["doctor_best"] == [1, 2] and data["doctor_worst"] == [2, 1]
    assert data["lattice"]["ok"] is True


def test_enumerate_missing_file(capsys, tmp_path):
    with pytest.raises(SystemExit) as exc:
        main(["enumerate", "--input", str(tmp_path / "missing.txt")])
    assert "missing.txt" in str(exc.value.code)


def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "matchsim", "run", "--n", "2", "--m", "2", "--seed", "3"],
        capture_output=True, text=True, check=True,
    )
    assert json.loads(proc.stdout)["n"] == 2
