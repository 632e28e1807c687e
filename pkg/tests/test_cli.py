import csv
import json
from pathlib import Path

import numpy as np
import pytest

from rotlab.cli import main
from rotlab.io import read_tuple, write_tuple
from rotlab.reps import PhaseMatrix, clock_matrix, shift_matrix
from rotlab.search import plant_instance

SCHEMA = Path(__file__).resolve().parents[1] / "CSV_SCHEMA.md"


def header(path):
    with open(path) as fh:
        return next(csv.reader(fh))


def without_meta(path):
    doc = json.loads(Path(path).read_text())
    doc.pop("meta")
    return doc


def test_rep_pair(tmp_path):
    assert main(["rep", "--pair", "1/3", "--mult", "2", "-o", str(tmp_path)]) == 0
    mats = read_tuple([tmp_path])
    assert len(mats) == 2 and mats[0].shape == (6, 6)
    assert json.loads((tmp_path / "manifest.json").read_text())["defect"] <= 1e-14


def test_rep_torus_and_trivial(tmp_path):
    assert main(["rep", "--torus3", "1/2,1/3,1/5", "-o", str(tmp_path / "t")]) == 0
    assert read_tuple([tmp_path / "t"])[0].shape == (30, 30)
    assert main(["-o", str(tmp_path / "z"), "rep", "--pair", "0/1"]) == 0
    assert all(np.array_equal(m, np.eye(1)) for m in read_tuple([tmp_path / "z"]))


def test_rep_rejects_irrational_torus(tmp_path, capsys):
    assert main(["rep", "--torus3", "0.41421356,0.5,0.25", "-o", str(tmp_path)]) == 1
    assert "error" in capsys.readouterr().err


def test_obstruct_exit_codes(tmp_path):
    main(["rep", "--torus3", "1/2,1/3,1/5", "-o", str(tmp_path / "t")])
    assert main(["obstruct", "--theta", str(tmp_path / "t" / "theta.json"),
                 "--matrices", str(tmp_path / "t"), "-o", str(tmp_path / "r0")]) == 0
    write_tuple(tmp_path / "cs8", [shift_matrix(8), clock_matrix(8)])
    assert main(["obstruct", "--theta", "0", "--matrices", str(tmp_path / "cs8"), "-o", str(tmp_path / "r2")]) == 2
    doc = json.loads((tmp_path / "r2" / "obstruction.json").read_text())
    assert doc["report"]["pairs"][0]["trace_condition_residual"] == pytest.approx(0.125, abs=1e-12)
    write_tuple(tmp_path / "cs2", [shift_matrix(2), clock_matrix(2)])
    assert main(["obstruct", "--theta", "0", "--matrices", str(tmp_path / "cs2"), "-o", str(tmp_path / "r3")]) == 3


def test_obstruct_parse_errors(tmp_path):
    (tmp_path / "bad.json").write_text("[")
    assert main(["obstruct", "--theta", "0", "--matrices", str(tmp_path / "bad.json"), "-o", str(tmp_path)]) == 1
    write_tuple(tmp_path / "cs8", [shift_matrix(8), clock_matrix(8)])
    assert main(["obstruct", "--theta", "0,0,0", "--matrices", str(tmp_path / "cs8"), "-o", str(tmp_path)]) == 1
    assert main(["obstruct", "--theta", "0,0", "--matrices", str(tmp_path / "cs8"), "-o", str(tmp_path)]) == 1
    with pytest.raises(SystemExit):
        main(["obstruct", "--theta", "0"])


def test_format_flag_and_global_position(tmp_path):
    write_tuple(tmp_path / "cs8", [shift_matrix(8), clock_matrix(8)])
    main(["--format", "csv", "obstruct", "--theta", "0", "--matrices", str(tmp_path / "cs8"), "-o", str(tmp_path / "c")])
    assert sorted(p.name for p in (tmp_path / "c").iterdir()) == ["obstruction.csv"]
    main(["obstruct", "--theta", "0", "--matrices", str(tmp_path / "cs8"), "--out", str(tmp_path / "j"), "--format", "json"])
    assert sorted(p.name for p in (tmp_path / "j").iterdir()) == ["obstruction.json"]


def test_tol_config_recorded(tmp_path):
    (tmp_path / "tol.json").write_text('{"gap_tol": 1e-5}')
    write_tuple(tmp_path / "cs8", [shift_matrix(8), clock_matrix(8)])
    main(["obstruct", "--tol-config", str(tmp_path / "tol.json"), "--theta", "0",
          "--matrices", str(tmp_path / "cs8"), "-o", str(tmp_path / "r")])
    doc = json.loads((tmp_path / "r" / "obstruction.json").read_text())
    assert doc["tolerances"]["gap_tol"] == 1e-5


def test_repair_command(tmp_path):
    Th = PhaseMatrix.rational(2, ["1/3"])
    tuple_, _ = plant_instance(Th, 3, 1e-3, seed=2)
    write_tuple(tmp_path / "in", tuple_)
    assert main(["repair", "--theta", "1/3", "--matrices", str(tmp_path / "in"), "-o", str(tmp_path / "out"),
                 "--format", "json", "--trace-csv", "--save-matrices"]) == 0
    doc = json.loads((tmp_path / "out" / "repair.json").read_text())
    assert doc["result"]["converged"] is True
    assert header(tmp_path / "out" / "repair_trace.csv") == ["iteration", "objective"]
    assert len(read_tuple([tmp_path / "out" / "repaired"])) == 2
    write_tuple(tmp_path / "exact", [shift_matrix(3), clock_matrix(3)])
    assert main(["repair", "--theta", "1/3", "--matrices", str(tmp_path / "exact"), "-o", str(tmp_path / "o2")]) == 0
    assert json.loads((tmp_path / "o2" / "repair.json").read_text())["result"]["iterations"] == 0
    # an obstructed input is reported, not an error
    write_tuple(tmp_path / "cs8", [shift_matrix(8), clock_matrix(8)])
    assert main(["repair", "--theta", "0", "--matrices", str(tmp_path / "cs8"), "-o", str(tmp_path / "o3")]) == 0
    res = json.loads((tmp_path / "o3" / "repair.json").read_text())["result"]
    assert not res["converged"] or res["distance_moved"] >= 0.1


def test_exel_suite_and_determinism(tmp_path):
    args = ["exel-suite", "--cases", "20", "--seed", "7"]
    assert main(args + ["-o", str(tmp_path / "a")]) == 0
    assert main(args + ["-o", str(tmp_path / "b")]) == 0
    assert without_meta(tmp_path / "a" / "exel_suite.json") == without_meta(tmp_path / "b" / "exel_suite.json")
    assert (tmp_path / "a" / "exel_suite.csv").read_bytes() == (tmp_path / "b" / "exel_suite.csv").read_bytes()


def test_counterexample_command(tmp_path):
    assert main(["counterexample", "--n-min", "2", "--n-max", "9", "-o", str(tmp_path)]) == 0
    with open(tmp_path / "counterexample.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert [int(r["n"]) for r in rows] == list(range(2, 10))
    assert all(r["bott_index_triple"] == "1" for r in rows)
    assert main(["counterexample", "--n-min", "5", "--n-max", "3", "-o", str(tmp_path)]) == 1


def test_csv_headers_match_schema(tmp_path):
    """Every CSV header the CLI writes appears verbatim in the frozen schema file."""
    schema = SCHEMA.read_text()
    main(["counterexample", "--n-min", "2", "--n-max", "3", "-o", str(tmp_path)])
    main(["exel-suite", "--cases", "3", "-o", str(tmp_path)])
    write_tuple(tmp_path / "cs8", [shift_matrix(8), clock_matrix(8)])
    main(["obstruct", "--theta", "0", "--matrices", str(tmp_path / "cs8"), "-o", str(tmp_path)])
    main(["repair", "--theta", "0", "--matrices", str(tmp_path / "cs8"), "--max-iters", "5", "-o", str(tmp_path)])
    for name in ["counterexample.csv", "exel_suite.csv", "obstruction.csv", "repair_trace.csv"]:
        assert "`" + ",".join(header(tmp_path / name)) + "`" in schema, name
