import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from rotlab.config import Tolerances
from rotlab.errors import ParseError
from rotlab.io import (
    matrix_from_json,
    matrix_to_json,
    read_matrix,
    read_phase_matrix,
    read_tuple,
    write_csv,
    write_json_report,
    write_matrix,
    write_phase_matrix,
    write_tuple,
)
from rotlab.reps import PhaseMatrix

finite = st.floats(allow_nan=False, allow_infinity=False, width=64)


@given(st.integers(1, 5), st.integers(1, 5), st.data())
def test_matrix_json_roundtrip_is_exact(r, c, data):
    vals = data.draw(st.lists(st.tuples(finite, finite), min_size=r * c, max_size=r * c))
    A = np.array([complex(a, b) for a, b in vals]).reshape(r, c)
    B = matrix_from_json(json.loads(json.dumps(matrix_to_json(A))))
    assert np.array_equal(A, B)


def test_matrix_file_roundtrip(tmp_path, rng):
    A = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    write_matrix(tmp_path / "a.json", A)
    assert np.array_equal(read_matrix(tmp_path / "a.json"), A)


@pytest.mark.parametrize("obj", [
    {"rows": 2, "cols": 2, "data": [[0, 0]] * 3},
    {"rows": 1, "cols": 1, "data": [[0, 0, 0]]},
    {"rows": 1, "cols": 1, "data": [[float("nan"), 0]]},
    {"cols": 1, "data": [[0, 0]]},
])
def test_matrix_json_rejects_malformed(obj):
    with pytest.raises(ParseError):
        matrix_from_json(obj)


def test_read_matrix_bad_json(tmp_path):
    (tmp_path / "x.json").write_text("{not json")
    with pytest.raises(ParseError):
        read_matrix(tmp_path / "x.json")


def test_tuple_manifest(tmp_path):
    mats = [np.eye(3), np.diag([1, 1j, -1])]
    write_tuple(tmp_path, mats, extra={"defect": 0.0})
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["matrices"] == ["v1.json", "v2.json"] and manifest["dimension"] == 3
    for source in ([tmp_path], [tmp_path / "manifest.json"], [tmp_path / "v1.json", tmp_path / "v2.json"]):
        back = read_tuple(source)
        assert all(np.array_equal(a, b) for a, b in zip(mats, back))


def test_phase_matrix_file(tmp_path):
    Th = PhaseMatrix.rational(3, ["1/2", "1/3", "1/5"])
    write_phase_matrix(tmp_path / "t.json", Th)
    back = read_phase_matrix(tmp_path / "t.json")
    assert np.array_equal(back.theta, Th.theta) and back.is_rational()
    (tmp_path / "bad.json").write_text('{"n": 2}')
    with pytest.raises(ParseError):
        read_phase_matrix(tmp_path / "bad.json")


def test_report_layout(tmp_path):
    write_json_report(tmp_path / "r.json", {"x": float("inf"), "y": np.float64(2.5)}, Tolerances(), command="t")
    doc = json.loads((tmp_path / "r.json").read_text())
    assert list(doc) == ["tolerances", "x", "y", "meta"]
    assert doc["x"] is None and doc["y"] == 2.5
    assert {"tool", "version", "timestamp", "command"} <= set(doc["meta"])


def test_csv_cells(tmp_path):
    write_csv(tmp_path / "a.csv", [{"a": None, "b": True, "c": 0.1}], ["a", "b", "c"])
    assert (tmp_path / "a.csv").read_text().splitlines() == ["a,b,c", ",true,0.1"]
    with pytest.raises(ValueError):
        write_csv(tmp_path / "b.csv", [{"zzz": 1}], ["a"])


def test_tolerance_config(tmp_path):
    (tmp_path / "tol.json").write_text('{"gap_tol": 1e-4}')
    tol = Tolerances.load(tmp_path / "tol.json")
    assert tol.gap_tol == 1e-4 and tol.eig_tol == Tolerances().eig_tol
    with pytest.raises(ValueError):
        Tolerances.from_dict({"bogus": 1})
    with pytest.raises(ValueError):
        Tolerances(gap_tol=-1)
