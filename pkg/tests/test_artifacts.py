"""
Tests for artifact writing and report merging.
"""

import json
from fractions import Fraction

import numpy as np
import pytest

from services.artifact_writer import ArtifactWriter, CsvArtifact, dumps, to_jsonable
from services.report_builder import build_report, emit_report, load_summaries, render_markdown
from utils.errors import MergeError


def _summary(name, checks, seed=1):
    return {
        "scenario": name,
        "suite": "all",
        "seed": seed,
        "checks": checks,
        "passed": all(c["passed"] for c in checks),
    }


def _check(name, claim, passed=True, error=None):
    return {
        "suite": "demo",
        "name": name,
        "claim": claim,
        "passed": passed,
        "observed": 0.5,
        "expected": 1,
        "error": error,
    }


def _write(directory, summary):
    directory.mkdir(parents=True, exist_ok=True)
    (directory / "summary.json").write_text(json.dumps(summary), encoding="utf-8")
    return directory


@pytest.mark.unit
class TestArtifactWriter:
    """Tests for to_jsonable and ArtifactWriter."""

    def test_to_jsonable(self):
        payload = {
            "ratio": Fraction(38, 9),
            "whole": Fraction(3),
            "count": np.int64(7),
            "spread": np.float64(0.25),
            "missing": float("nan"),
            "rows": (1, 2),
        }

        assert to_jsonable(payload) == {
            "ratio": "38/9",
            "whole": 3,
            "count": 7,
            "spread": 0.25,
            "missing": "nan",
            "rows": [1, 2],
        }

    def test_dumps_is_sorted(self):
        assert dumps({"b": 1, "a": 2}).index('"a"') < dumps({"b": 1, "a": 2}).index('"b"')
        assert dumps({}).endswith("\n")

    def test_csv_line_endings(self, tmp_path):
        writer = ArtifactWriter(tmp_path / "out")
        path = writer.write("table.csv", CsvArtifact(["N", "ratio"], [(1, Fraction(1, 2)), (2, 0.1)]))

        assert path.read_bytes() == b"N,ratio\n1,1/2\n2,0.1\n"
        assert writer.written == ["table.csv"]

    def test_json_bytes(self, tmp_path):
        writer = ArtifactWriter(tmp_path)
        writer.write_json("x.json", {"beta": Fraction(1, 2)})

        assert (tmp_path / "x.json").read_bytes() == b'{\n  "beta": "1/2"\n}\n'


@pytest.mark.unit
class TestReportBuilder:
    """Tests for load_summaries, build_report and render_markdown."""

    def test_claims_in_order(self, tmp_path):
        first = _write(tmp_path / "one", _summary("one", [_check("m", "d"), _check("v", "c")]))
        second = _write(tmp_path / "two", _summary("two", [_check("k", "a"), _check("i", "coboundary")]))
        report = build_report(load_summaries([second, first]))

        assert list(report["claims"]) == ["a", "c", "d", "coboundary"]
        assert [s["name"] for s in report["scenarios"]] == ["one", "two"]
        assert report["passed"]

    def test_failure_and_error_rendering(self):
        checks = [_check("m", "d", passed=False), _check("o", "d", passed=False, error={"kind": "capacity"})]
        report = build_report([_summary("bad", checks)])
        text = render_markdown(report)

        assert not report["claims"]["d"]["passed"]
        assert "| bad | demo.m | FAIL |" in text
        assert "| bad | demo.o | ERROR |" in text

    def test_identical_duplicates_merge(self, tmp_path):
        summary = _summary("same", [_check("m", "d")])
        a = _write(tmp_path / "a", summary)
        b = _write(tmp_path / "b", summary)

        assert len(load_summaries([a, b])) == 1

    def test_conflicting_duplicates(self, tmp_path):
        a = _write(tmp_path / "a", _summary("same", [_check("m", "d")]))
        b = _write(tmp_path / "b", _summary("same", [_check("m", "d", passed=False)]))

        with pytest.raises(MergeError):
            load_summaries([a, b])

    def test_unreadable_summary(self, tmp_path):
        with pytest.raises(MergeError):
            load_summaries([tmp_path / "nowhere.json"])

    def test_emit_writes_both_files(self, tmp_path):
        source = _write(tmp_path / "run", _summary("run", [_check("m", "e")]))
        report = emit_report([source], tmp_path / "report")

        assert report["passed"]
        assert (tmp_path / "report" / "report.json").exists()
        assert b"\r\n" not in (tmp_path / "report" / "report.md").read_bytes()

    def test_emit_needs_summaries(self, tmp_path):
        with pytest.raises(MergeError):
            emit_report([], tmp_path)
