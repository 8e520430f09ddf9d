# tests/test_cli.py
import json
import logging
import math
import os

import pytest
from click.testing import CliRunner

from cli import cli
from core import database
from handlers.common import exit_with
from handlers.decorators import EXIT_USAGE, EXIT_VERIFICATION_FAILED


@pytest.fixture(autouse=True)
def _restore_logging():
    root = logging.getLogger()
    handlers, level = root.handlers[:], root.level
    yield
    root.handlers[:] = handlers
    root.setLevel(level)


@pytest.fixture
def runner():
    return CliRunner(mix_stderr=False)


@pytest.fixture
def fig2_dir(runner, tmp_path, fig2_pair):
    out = tmp_path / "fig2"
    result = runner.invoke(cli, ["generate", "--family", "fig2", "--out", str(out)])
    assert result.exit_code == 0, result.stderr
    return out


def _json(result):
    return json.loads(result.stdout)


class TestGenerate:
    def test_fig2(self, runner, fig2_dir):
        assert sorted(os.listdir(fig2_dir)) == ["left.xyz", "params.json", "right.xyz"]

    def test_report(self, runner, tmp_path):
        result = runner.invoke(cli, ["generate", "--family", "cubeocta", "--a", "1.0", "--b", "2.5",
                                     "--variant", "blue", "--out", str(tmp_path / "co")])
        assert result.exit_code == 0, result.stderr
        data = _json(result)
        assert data["family"] == "cubeocta"
        assert data["params"] == {"a": 1.0, "b": 2.5, "variant": "blue"}
        assert data["expected_kinds"] == [4, 4]
        assert data["details"]["n_left"] == 8

    def test_aug_with_base_and_layers(self, runner, tmp_path, fig2_pair):
        result = runner.invoke(cli, ["generate", "--family", "aug", "--base", "fig2", "--layers", "ori:1,all:2",
                                     "--out", str(tmp_path / "aug")])
        assert result.exit_code == 0, result.stderr
        assert _json(result)["details"]["n_left"] == 18

    def test_bad_layers_is_a_usage_error(self, runner, tmp_path, fig2_pair):
        result = runner.invoke(cli, ["generate", "--family", "aug", "--layers", "ori:1,ori:1",
                                     "--out", str(tmp_path / "aug")])
        assert result.exit_code == 2
        assert "error:" in result.stderr

    def test_unknown_family(self, runner, tmp_path):
        result = runner.invoke(cli, ["generate", "--family", "nope", "--out", str(tmp_path)])
        assert result.exit_code == 2


class TestDistinguish:
    def _args(self, fig2_dir, *extra):
        return ["distinguish", "--left", str(fig2_dir / "left.xyz"), "--right", str(fig2_dir / "right.xyz"), *extra]

    def test_wl1e_cannot_separate_fig2(self, runner, fig2_dir):
        result = runner.invoke(cli, self._args(fig2_dir, "--method", "wl1e"))
        assert result.exit_code == 0, result.stderr
        data = _json(result)
        assert data["verdicts"] == {"wl_distinguished": False}
        assert data["separation_round"] is None
        assert data["pass"] is True

    def test_2fwl_separates_fig2(self, runner, fig2_dir):
        result = runner.invoke(cli, self._args(fig2_dir, "--method", "kfwl", "--k", "2", "--rounds", "3",
                                               "--expect", "distinguished"))
        assert result.exit_code == 0, result.stderr
        data = _json(result)
        assert data["verdicts"]["wl_distinguished"] is True
        assert data["k"] == 2 and data["rounds"] == 3

    def test_wrong_expectation_exits_1(self, runner, fig2_dir):
        result = runner.invoke(cli, self._args(fig2_dir, "--method", "wl1e", "--expect", "distinguished"))
        assert result.exit_code == 1
        assert _json(result)["pass"] is False

    def test_output_is_byte_deterministic(self, runner, fig2_dir):
        first = runner.invoke(cli, self._args(fig2_dir, "--method", "kewl", "--rounds", "2"))
        second = runner.invoke(cli, self._args(fig2_dir, "--method", "kewl", "--rounds", "2"))
        assert first.stdout == second.stdout
        assert "timings_ms" not in _json(first)

    def test_timings_flag(self, runner, fig2_dir):
        result = runner.invoke(cli, self._args(fig2_dir, "--method", "wl1e", "--timings"))
        assert len(_json(result)["timings_ms"]) == 1

    def test_text_format_to_file(self, runner, fig2_dir, tmp_path):
        out = tmp_path / "report.txt"
        result = runner.invoke(cli, self._args(fig2_dir, "--method", "wl1e", "--format", "text", "--out", str(out)))
        assert result.exit_code == 0
        assert result.stdout == ""
        assert out.read_text(encoding="utf-8").startswith("✅ PASS  distinguish")

    def test_memory_guard_is_a_usage_error(self, runner, fig2_dir):
        result = runner.invoke(cli, self._args(fig2_dir, "--method", "kwl", "--k", "4", "--max-tuples", "10"))
        assert result.exit_code == 2
        assert "exceeds the configured cap" in result.stderr

    def test_malformed_xyz(self, runner, tmp_path, fig2_dir):
        bad = tmp_path / "bad.xyz"
        bad.write_text("2\ncomment\n0 0 0 0\n0 a 0 0\n")
        result = runner.invoke(cli, ["distinguish", "--left", str(bad), "--right", str(fig2_dir / "right.xyz"),
                                     "--method", "wl1e"])
        assert result.exit_code == 2
        assert "line 4" in result.stderr

    def test_missing_file(self, runner, tmp_path):
        result = runner.invoke(cli, ["distinguish", "--left", str(tmp_path / "x.xyz"),
                                     "--right", str(tmp_path / "y.xyz"), "--method", "wl1e"])
        assert result.exit_code == 2


class TestCongruentAndRefine:
    def test_congruent_fig2(self, runner, fig2_dir):
        result = runner.invoke(cli, ["congruent", "--left", str(fig2_dir / "left.xyz"),
                                     "--right", str(fig2_dir / "right.xyz"), "--expect", "non-congruent"])
        assert result.exit_code == 0, result.stderr
        data = _json(result)
        assert data["verdicts"] == {"oracle_congruent": False}
        assert data["details"]["max_residual"] is None

    def test_congruent_self(self, runner, fig2_dir):
        left = str(fig2_dir / "left.xyz")
        data = _json(runner.invoke(cli, ["congruent", "--left", left, "--right", left]))
        assert data["verdicts"]["oracle_congruent"] is True
        assert sorted(data["details"]["witness_permutation"]) == list(range(6))

    def test_refine(self, runner, fig2_dir):
        result = runner.invoke(cli, ["refine", "--input", str(fig2_dir / "left.xyz"), "--method", "wl1e"])
        assert result.exit_code == 0, result.stderr
        data = _json(result)
        assert data["kind_histogram"] == [6]
        assert data["details"]["node_partition"] == [[0, 1, 2, 3, 4, 5]]
        assert data["details"]["per_round_class_counts"][0] == 1


class TestVerifyFamily:
    def test_cubeocta(self, runner):
        result = runner.invoke(cli, ["verify-family", "--family", "cubeocta", "--samples", "3", "--seed", "4"])
        assert result.exit_code == 0, result.stderr
        data = _json(result)
        assert len(data) == 3
        assert all(r["pass"] and r["seed"] == 4 for r in data)

    def test_twocubes_seeded_samples(self, runner):
        result = runner.invoke(cli, ["verify-family", "--family", "twocubes", "--samples", "20", "--seed", "1"])
        assert result.exit_code == 0, result.stderr
        data = _json(result)
        assert len(data) == 20
        assert all(r["pass"] for r in data)
        assert all(r["details"]["note"] == "" for r in data)
        assert {tuple(r["kind_histogram"]) for r in data} <= {(8,), (4, 4)}

    def test_twocubes_has_no_rotation_option(self, runner, tmp_path):
        result = runner.invoke(cli, ["generate", "--family", "twocubes", "--psi", "30", "--out", str(tmp_path)])
        assert result.exit_code == 2

    def test_fig2_includes_stable_state(self, runner, fig2_pair):
        result = runner.invoke(cli, ["verify-family", "--family", "fig2"])
        assert result.exit_code == 0, result.stderr
        (report,) = _json(result)
        assert report["verdicts"] == {"oracle_congruent": False, "wl_distinguished": False, "stable_state": True}
        assert report["kind_histogram"] == [6]


class TestForwardAndBench:
    def test_forward(self, runner, fig2_dir):
        result = runner.invoke(cli, ["forward", "--input", str(fig2_dir / "left.xyz"), "--variant", "f",
                                     "--rounds", "2", "--seed", "3"])
        assert result.exit_code == 0, result.stderr
        data = _json(result)
        assert math.isfinite(data["details"]["scalar"])
        assert len(data["details"]["equivariant"]) == 3
        assert data["method"] == "kfwl"

    def test_forward_rejects_bad_k(self, runner, fig2_dir):
        result = runner.invoke(cli, ["forward", "--input", str(fig2_dir / "left.xyz"), "--k", "1"])
        assert result.exit_code == 2

    def test_bench_table(self, runner):
        result = runner.invoke(cli, ["bench", "--method", "kfwl", "--n-range", "5:7:2", "--rounds", "1"])
        assert result.exit_code == 0, result.stderr
        lines = result.stdout.strip().splitlines()
        assert len(lines) == 4
        assert "tuples" in lines[0]

    def test_bench_json(self, runner):
        result = runner.invoke(cli, ["bench", "--method", "wl1e", "--n-range", "6", "--format", "json"])
        data = _json(result)
        assert data["details"]["rows"][0][:2] == [6, 6]

    def test_bench_bad_range(self, runner):
        result = runner.invoke(cli, ["bench", "--method", "wl1e", "--n-range", "9:3"])
        assert result.exit_code == 2


class TestCorpus:
    @pytest.fixture
    def corpus_dir(self, runner, tmp_path):
        root = tmp_path / "corpus"
        for name, variant, b in (("red", "red", "2.0"), ("blue", "blue", "1.5")):
            result = runner.invoke(cli, ["generate", "--family", "cubeocta", "--variant", variant, "--b", b,
                                         "--out", str(root / name)])
            assert result.exit_code == 0, result.stderr
        return root

    def test_separation_json(self, runner, corpus_dir):
        result = runner.invoke(cli, ["corpus", "--dir", str(corpus_dir), "--suite", "separation", "--format", "json"])
        assert result.exit_code == 0, result.stderr
        data = _json(result)
        assert data["verdicts"] == {"suite_passed": True}
        assert data["details"]["pairs"] == 2
        assert [row[0] for row in data["details"]["rows"]] == ["blue", "red"]
        suite, corpus, pairs, failures, _ = database.get_suite_runs(1)[0]
        assert (suite, corpus, pairs, failures) == ("separation", str(corpus_dir), 2, 0)

    def test_hierarchy_json(self, runner, corpus_dir):
        result = runner.invoke(cli, ["corpus", "--dir", str(corpus_dir), "--suite", "hierarchy",
                                     "--random-pairs", "3", "--format", "json"])
        assert result.exit_code == 0, result.stderr
        data = _json(result)
        assert data["verdicts"] == {"suite_passed": True}
        assert [row[0] for row in data["details"]["rows"]][:2] == ["blue", "red"]

    def test_consistency_json(self, runner, corpus_dir):
        result = runner.invoke(cli, ["corpus", "--dir", str(corpus_dir), "--suite", "consistency",
                                     "--seeds", "2", "--format", "json"])
        assert result.exit_code == 0, result.stderr
        data = _json(result)
        assert data["verdicts"] == {"suite_passed": True}
        assert all(row[2] == "tie" for row in data["details"]["rows"])

    def test_soundness_text(self, runner, corpus_dir):
        result = runner.invoke(cli, ["corpus", "--dir", str(corpus_dir), "--suite", "soundness", "--samples", "4"])
        assert result.exit_code == 0, result.stderr
        assert "✅ PASS  soundness: 2 pairs, 4 checks" in result.stdout

    def test_broken_entry_fails_the_run(self, runner, corpus_dir):
        broken = corpus_dir / "zz"
        broken.mkdir()
        (broken / "left.xyz").write_text("x\n")
        (broken / "right.xyz").write_text("1\n\n0 0 0 0\n")
        result = runner.invoke(cli, ["corpus", "--dir", str(corpus_dir), "--suite", "separation"])
        assert result.exit_code == 1
        assert "zz" in result.stdout

    def test_missing_dir(self, runner, tmp_path):
        result = runner.invoke(cli, ["corpus", "--dir", str(tmp_path / "nope"), "--suite", "soundness"])
        assert result.exit_code == 2


class TestExitCodes:
    def test_exit_with_uses_verification_code(self):
        exit_with(True)
        with pytest.raises(SystemExit) as excinfo:
            exit_with(False)
        assert excinfo.value.code == EXIT_VERIFICATION_FAILED == 1

    def test_usage_code(self):
        assert EXIT_USAGE == 2
