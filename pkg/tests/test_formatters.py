# tests/test_formatters.py
import json
import math

from utils import formatters
from utils.formatters import Report


def test_pass_follows_expectations():
    ok = Report(command="x", verdicts={"oracle_congruent": False}, expectations={"oracle_congruent": False})
    bad = Report(command="x", verdicts={"oracle_congruent": True}, expectations={"oracle_congruent": False})
    missing = Report(command="x", verdicts={}, expectations={"wl_distinguished": False})
    assert ok.passed and not bad.passed and not missing.passed


def test_pass_follows_kinds():
    assert Report(command="x", kind_histogram=[4, 2], expected_kinds=[4, 2]).passed
    assert not Report(command="x", kind_histogram=[4, 4], expected_kinds=[4, 2]).passed
    assert not Report(command="x", kind_histogram=[6], expected_kind_count=2).passed


def test_json_uses_pass_alias_and_sorted_keys():
    text = formatters.render_json(Report(command="distinguish", tau=1e-9, timings_ms=[1.5]))
    data = json.loads(text)
    assert data["pass"] is True
    assert "passed" not in data
    assert "timings_ms" not in data
    assert list(data) == sorted(data)


def test_timings_are_opt_in():
    data = json.loads(formatters.render_json(Report(command="x", timings_ms=[1.25]), include_timings=True))
    assert data["timings_ms"] == [1.25]


def test_floats_are_rounded_and_inf_becomes_null():
    data = json.loads(formatters.render_json(Report(command="x", details={"v": 1 / 3, "r": math.inf})))
    assert data["details"]["v"] == float(f"{1 / 3:.12g}")
    assert data["details"]["r"] is None


def test_render_json_is_byte_deterministic():
    make = lambda: Report(command="x", params={"b": 1, "a": [0.1, 0.2]}, verdicts={"z": True, "a": False})
    assert formatters.render_json(make()) == formatters.render_json(make())


def test_render_text():
    text = formatters.render_text(Report(command="congruent", verdicts={"oracle_congruent": False},
                                         expectations={"oracle_congruent": False}))
    assert text.startswith("✅ PASS  congruent")
    assert "oracle_congruent: False (expected False)" in text


def test_render_list_and_table():
    reports = [Report(command="a"), Report(command="b")]
    assert len(json.loads(formatters.render(reports, "json"))) == 2
    table = formatters.render_table(["n", "ms"], [[8, "1.00"], [12, "2.00"]])
    lines = table.splitlines()
    assert "n" in lines[0] and "ms" in lines[0]
    assert len(lines) == 4
