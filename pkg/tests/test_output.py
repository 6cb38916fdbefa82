"""Tests for atomdem.output."""

import json
import os

import numpy as np
import pytest

from atomdem.entropy import EntropyTrace
from atomdem.oracle import CheckResult
from atomdem.output import (
    OutputError,
    emit,
    format_float,
    render_report,
    render_sweep,
    render_trace,
    write_atomic,
)


@pytest.fixture
def trace():
    return EntropyTrace(
        times=np.array([0.0, 0.5, 1.0]),
        entropy=np.array([0.0, 0.25, 0.125]),
        populations=np.array([[1.0, 0.0, 0.0], [0.5, 0.25, 0.25], [0.25, 0.375, 0.375]]),
        basis_labels=("a", "chi+", "chi-"),
    )


class TestFormatFloat:
    def test_nine_significant_digits(self):
        assert format_float(1 / 3) == "0.333333333"
        assert format_float(2.0) == "2"
        assert format_float(1.5e-12) == "1.5e-12"

    def test_no_negative_zero(self):
        assert format_float(-0.0) == "0"

    def test_numpy_scalars(self):
        assert format_float(np.float64(0.1)) == "0.1"


class TestRenderTrace:
    def test_csv_layout(self, trace):
        text = render_trace(trace, {"command": "trace", "scheme": "lower", "gamma": 1.0})
        lines = text.splitlines()
        assert lines[:7] == [
            "# command: trace",
            "# scheme: lower",
            "# gamma: 1",
            "# basis: a,chi+,chi-",
            "# peak_t_gamma: 0.5",
            "# peak_S: 0.25",
            "# final_S: 0.125",
        ]
        assert lines[7] == "t_gamma,S,pop_1,pop_2,pop_3"
        assert lines[8] == "0,0,1,0,0"
        assert lines[9] == "0.5,0.25,0.5,0.25,0.25"
        assert len(lines) == 11
        assert text.endswith("\n")

    def test_json_layout(self, trace):
        document = json.loads(render_trace(trace, {"command": "trace"}, fmt="json"))
        assert document["columns"] == ["t_gamma", "S", "pop_1", "pop_2", "pop_3"]
        assert document["rows"][2] == [1.0, 0.125, 0.25, 0.375, 0.375]
        assert document["header"]["peak_S"] == 0.25

    def test_byte_stable(self, trace):
        header = {"command": "trace", "detuning": 0.1}
        assert render_trace(trace, header) == render_trace(trace, header)
        assert render_trace(trace, header, "json") == render_trace(trace, header, "json")


class TestRenderSweep:
    def test_csv_columns(self):
        text = render_sweep("detuning", [-1.0, 0.0, 1.0], [0.1, 0.2, 0.1], {"omega": "1+0j"})
        assert text.splitlines() == [
            "# omega: 1+0j",
            "detuning,S_infinity",
            "-1,0.1",
            "0,0.2",
            "1,0.1",
        ]

    def test_json_rounding(self):
        document = json.loads(render_sweep("omega", [0.1], [1 / 3], {}, fmt="json"))
        assert document["columns"] == ["omega", "S_infinity"]
        assert document["rows"] == [[0.1, 0.333333333]]


class TestRenderReport:
    def test_all_passed(self):
        results = [
            CheckResult("upper-classical", "density", 1e-3, 4e-3),
            CheckResult("upper-classical", "norm", 5e-9, 1e-8),
        ]
        document = json.loads(render_report(results, {"bandwidth": 40.0, "quick": False}))
        assert document["passed"] is True
        assert document["worst"] == "upper-classical/norm"
        assert document["settings"] == {"bandwidth": 40.0, "quick": False}
        assert document["checks"][0] == {
            "variant": "upper-classical",
            "check": "density",
            "max_error": 0.001,
            "threshold": 0.004,
            "passed": True,
        }

    def test_worst_offender_named(self):
        results = [
            CheckResult("lower-classical", "density", 5e-3, 4e-3),
            CheckResult("lower-quantized", "entropy", 0.5, 0.04),
        ]
        document = json.loads(render_report(results, {}))
        assert document["passed"] is False
        assert document["worst"] == "lower-quantized/entropy"

    def test_keys_sorted(self):
        text = render_report([], {"tolerance": None})
        assert text.index('"checks"') < text.index('"passed"') < text.index('"settings"')
        assert json.loads(text)["worst"] is None


class TestWriteAtomic:
    def test_creates_parents(self, tmp_path):
        path = tmp_path / "figures" / "fig2a_solid.csv"
        write_atomic(path, "t_gamma,S\n")
        assert path.read_text() == "t_gamma,S\n"

    def test_replaces_existing(self, tmp_path):
        path = tmp_path / "out.csv"
        path.write_text("old")
        write_atomic(path, "new")
        assert path.read_text() == "new"

    def test_no_temp_files_left(self, tmp_path):
        write_atomic(tmp_path / "out.csv", "x")
        assert os.listdir(tmp_path) == ["out.csv"]

    def test_temp_file_removed_on_failure(self, tmp_path, monkeypatch):
        def _fail(src, dst):
            raise OSError(28, "No space left on device")

        monkeypatch.setattr("atomdem.output.os.replace", _fail)
        with pytest.raises(OSError):
            write_atomic(tmp_path / "out.csv", "x")
        assert os.listdir(tmp_path) == []


class TestEmit:
    def test_stdout(self, capsys):
        emit("a,b\n")
        assert capsys.readouterr().out == "a,b\n"

    def test_dash_means_stdout(self, capsys):
        emit("x\n", "-")
        assert capsys.readouterr().out == "x\n"

    def test_file(self, tmp_path, capsys):
        path = tmp_path / "run.csv"
        emit("x\n", str(path))
        assert path.read_text() == "x\n"
        assert capsys.readouterr().out == ""

    def test_unwritable_target(self, tmp_path):
        blocker = tmp_path / "blocker"
        blocker.write_text("")
        with pytest.raises(OutputError) as exc_info:
            emit("x\n", str(blocker / "run.csv"))
        assert exc_info.value.path == str(blocker / "run.csv")
