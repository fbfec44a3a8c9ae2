import csv
import io
import json
import random

import pytest

from tracerecon.cli import main

import casedata
from conftest import FIXTURES, PACKAGED_SIG_DIR

FF3_SIG = str(PACKAGED_SIG_DIR / "ff3.sig")
IE8_SIG = str(PACKAGED_SIG_DIR / "ie8.sig")
C1 = str(FIXTURES / "computer1.body")


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


# --- scan -----------------------------------------------------------------


def test_scan_table_output(capsys):
    code, out, err = run(capsys, "scan", C1, FF3_SIG, IE8_SIG)
    assert code == 0
    lines = out.splitlines()
    assert lines[0].split() == [
        "computer", "action", "rank", "interval_start", "interval_end",
        "evidence_count", "note",
    ]
    assert len(lines) == 11  # header plus ten detections
    assert "10 detections" in err
    # newest first: the parallel-instance diagnostic rows lead the timeline
    assert "parallel-instance-diagnostic" in lines[1]


def test_scan_csv_and_records_carry_the_same_logical_rows(capsys):
    _, table_out, _ = run(capsys, "scan", C1, FF3_SIG, IE8_SIG)
    _, csv_out, _ = run(capsys, "scan", C1, FF3_SIG, IE8_SIG, "--format", "csv")
    _, records_out, _ = run(capsys, "scan", C1, FF3_SIG, IE8_SIG, "--format", "records")

    csv_rows = list(csv.DictReader(io.StringIO(csv_out)))

    table_lines = table_out.splitlines()[1:]
    assert len(csv_rows) == len(table_lines)
    for row, line in zip(csv_rows, table_lines):
        for cell in row.values():
            assert cell in line

    blocks = [b for b in records_out.split("\n\n") if b.strip()]
    assert len(blocks) == len(csv_rows)
    for block, row in zip(blocks, csv_rows):
        parsed = dict(line.split(": ", 1) for line in block.splitlines())
        assert parsed == dict(row)


def test_scan_utc_display_renders_iso8601(capsys):
    _, out, _ = run(capsys, "scan", C1, FF3_SIG, "--utc-display", "--format", "csv")
    rows = list(csv.DictReader(io.StringIO(out)))
    assert rows[0]["interval_end"] == "2011-07-24T15:02:31Z"


def test_scan_label_defaults_to_the_file_stem(capsys):
    _, out, _ = run(capsys, "scan", C1, FF3_SIG, "--format", "csv")
    rows = list(csv.DictReader(io.StringIO(out)))
    assert {row["computer"] for row in rows} == {"computer1"}


def test_scan_empty_bodyfile_reports_zero_detections(capsys, tmp_path):
    empty = tmp_path / "empty.body"
    empty.write_text("")
    code, out, err = run(capsys, "scan", str(empty), FF3_SIG)
    assert code == 0
    assert "0 detections" in err


def test_scan_missing_metadata_exits_2(capsys, tmp_path):
    code, _, err = run(capsys, "scan", str(tmp_path / "missing.body"), FF3_SIG)
    assert code == 2
    assert "missing.body" in err


def test_scan_bad_signature_file_exits_3_with_line_number(capsys, tmp_path):
    bad = tmp_path / "bad.sig"
    bad.write_text("action: A\nthreshold: 0\ncore modified x\n")
    code, _, err = run(capsys, "scan", C1, str(bad))
    assert code == 3
    assert "line 2" in err


def test_scan_uses_signature_dir_from_environment(capsys, monkeypatch):
    monkeypatch.setenv("TRACE_RECON_SIG_DIR", str(PACKAGED_SIG_DIR))
    code, out, _ = run(capsys, "scan", C1, "--format", "csv")
    assert code == 0
    actions = {row["action"] for row in csv.DictReader(io.StringIO(out))}
    assert actions == {casedata.FF3, casedata.IE8}


def test_scan_defaults_to_the_packaged_signatures(capsys):
    code, out, _ = run(capsys, "scan", C1, "--format", "csv")
    assert code == 0
    actions = {row["action"] for row in csv.DictReader(io.StringIO(out))}
    assert actions == {casedata.FF3, casedata.IE8}


def test_scan_output_is_identical_across_runs_and_permutations(capsys, tmp_path):
    _, baseline, _ = run(capsys, "scan", C1, FF3_SIG, IE8_SIG, "--label", "c1")
    _, again, _ = run(capsys, "scan", C1, FF3_SIG, IE8_SIG, "--label", "c1")
    assert baseline == again

    lines = (FIXTURES / "computer1.body").read_text().splitlines()
    rng = random.Random(99)
    for i in range(3):
        shuffled = lines[:]
        rng.shuffle(shuffled)
        permuted = tmp_path / f"perm{i}.body"
        permuted.write_text("\n".join(shuffled) + "\n")
        _, out, _ = run(capsys, "scan", str(permuted), FF3_SIG, IE8_SIG, "--label", "c1")
        assert out == baseline


# --- calibrate -------------------------------------------------------------


def test_calibrate_prints_the_estimate(capsys):
    code, out, _ = run(capsys, "calibrate", str(FIXTURES / "calibration_ie8.txt"))
    assert code == 0
    assert "n: 3" in out
    assert "mean: 27.4" in out
    assert "sigma: 16.76" in out
    assert "theta: 61" in out


def test_calibrate_reads_stdin_identically(capsys, monkeypatch):
    text = (FIXTURES / "calibration_ie8.txt").read_text()
    _, from_file, _ = run(capsys, "calibrate", str(FIXTURES / "calibration_ie8.txt"))
    monkeypatch.setattr("sys.stdin", io.StringIO(text))
    _, from_stdin, _ = run(capsys, "calibrate", "-")
    assert from_stdin == from_file


def test_calibrate_k_zero_is_a_usage_error(capsys):
    with pytest.raises(SystemExit) as exc_info:
        main(["calibrate", str(FIXTURES / "calibration_ie8.txt"), "--k", "0"])
    assert exc_info.value.code == 2


def test_calibrate_insufficient_samples_exits_3(capsys, tmp_path):
    one = tmp_path / "one.txt"
    one.write_text("12.5\n")
    code, _, err = run(capsys, "calibrate", str(one))
    assert code == 3
    assert "insufficient" in err


def test_calibrate_bad_sample_line_exits_3(capsys, tmp_path):
    bad = tmp_path / "bad.txt"
    bad.write_text("12.5\nwhat\n")
    code, _, err = run(capsys, "calibrate", str(bad))
    assert code == 3
    assert "line 2" in err


def test_calibrate_missing_file_exits_2(capsys, tmp_path):
    code, _, _ = run(capsys, "calibrate", str(tmp_path / "none.txt"))
    assert code == 2


# --- simulate ----------------------------------------------------------------


def test_simulate_writes_deterministic_outputs(capsys, tmp_path):
    scenario = str(FIXTURES / "scenario_basic.scn")
    out_a, out_b = tmp_path / "a", tmp_path / "b"
    assert run(capsys, "simulate", scenario, "--seed", "7", "--out", str(out_a))[0] == 0
    assert run(capsys, "simulate", scenario, "--seed", "7", "--out", str(out_b))[0] == 0
    assert (out_a / "metadata.body").read_bytes() == (out_b / "metadata.body").read_bytes()
    assert (out_a / "truth.json").read_bytes() == (out_b / "truth.json").read_bytes()

    truth = json.loads((out_a / "truth.json").read_text())
    assert truth["seed"] == 7
    assert [i["action"] for i in truth["instances"]] == [
        "open editor", "open viewer", "open editor",
    ]


def test_simulate_different_seed_changes_the_metadata(capsys, tmp_path):
    scenario = str(FIXTURES / "scenario_basic.scn")
    out_a, out_b = tmp_path / "a", tmp_path / "b"
    run(capsys, "simulate", scenario, "--seed", "1", "--out", str(out_a))
    run(capsys, "simulate", scenario, "--seed", "2", "--out", str(out_b))
    assert (out_a / "metadata.body").read_bytes() != (out_b / "metadata.body").read_bytes()


def test_simulate_check_passes_on_a_sound_scenario(capsys, tmp_path):
    code, out, _ = run(
        capsys,
        "simulate",
        str(FIXTURES / "scenario_basic.scn"),
        "--seed", "11",
        "--out", str(tmp_path / "run"),
        "--check",
    )
    assert code == 0
    assert "interval-soundness: PASS" in out
    assert "count-bound: PASS" in out
    assert "most-recent-coverage: PASS" in out
    assert "no-false-positives: PASS" in out


def test_simulate_unknown_action_exits_3(capsys, tmp_path):
    bad = tmp_path / "bad.scn"
    bad.write_text("action: a\nthreshold: 5\nma modified /x\nschedule:\n10 ghost 0\n")
    code, _, err = run(capsys, "simulate", str(bad), "--out", str(tmp_path / "o"))
    assert code == 3
    assert "ghost" in err


def test_simulate_missing_scenario_exits_2(capsys, tmp_path):
    code, _, _ = run(capsys, "simulate", str(tmp_path / "none.scn"), "--out", str(tmp_path / "o"))
    assert code == 2
