import json
import math

import pytest

from specshatter.cli import main, run_config
from specshatter.errors import ConfigError
from specshatter.report import read_csv

SMALL_TAIL = {
    "command": "verify.sv-tail",
    "params": {
        "ensemble": {"n": 5},
        "trials": 2000,
        "eps_grid": {"geomspace": [0.01, 0.1, 4]},
    },
}


def _write(tmp_path, name, obj):
    path = tmp_path / name
    path.write_text(json.dumps(obj) if not isinstance(obj, str) else obj)
    return path


def _last_json(capsys):
    out = capsys.readouterr().out.strip().splitlines()
    return json.loads(out[-1])


@pytest.fixture(autouse=True)
def _no_env_seed(monkeypatch):
    monkeypatch.delenv("SPECSHATTER_SEED", raising=False)


class TestAnalyze:
    def test_jordan_like(self, tmp_path, capsys):
        (tmp_path / "m.txt").write_text("2 2\n0 1\n0 1\n")
        cfg = _write(tmp_path, "c.json", {"params": {"matrix": "m.txt"}})
        assert main(["analyze", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 0
        out = json.loads((tmp_path / "o" / "analysis.json").read_text())
        assert out["kappas"] == pytest.approx([math.sqrt(2)] * 2, abs=1e-10)
        assert out["kappa_V_upper"] == pytest.approx(1 + math.sqrt(2), abs=1e-10)
        assert out["meta"]["seed"] is None
        assert len(out["meta"]["config_hash"]) == 64

    def test_submatrix_flag_uses_gram_for_nonsymmetric(self, tmp_path):
        cfg = _write(tmp_path, "c.json", {"params": {"matrix": [[1, 2], [0, 3]]}})
        assert main(["analyze", "--config", str(cfg), "--out", str(tmp_path / "o"), "--submatrix", "k=1"]) == 0
        out = json.loads((tmp_path / "o" / "analysis.json").read_text())
        assert out["submatrix_input"] == "gram M^T M"
        assert out["submatrix"]["value"] == pytest.approx(13.0)

    def test_defective_matrix_is_error(self, tmp_path, capsys):
        cfg = _write(tmp_path, "c.json", {"params": {"matrix": [[0, 1], [0, 0]]}})
        assert main(["analyze", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 1
        assert _last_json(capsys)["error"] == "defective_or_clustered"


class TestErrors:
    def test_missing_config(self, tmp_path, capsys):
        assert main(["analyze", "--config", str(tmp_path / "none.json"), "--out", str(tmp_path)]) == 1
        assert _last_json(capsys)["error"] == "io"

    def test_bad_json(self, tmp_path, capsys):
        cfg = _write(tmp_path, "c.json", "{not json")
        assert main(["analyze", "--config", str(cfg), "--out", str(tmp_path)]) == 1
        assert _last_json(capsys)["error"] == "parse"

    def test_unknown_family(self, tmp_path, capsys):
        bad = json.loads(json.dumps(SMALL_TAIL))
        bad["params"]["ensemble"]["family"] = "cauchy"
        cfg = _write(tmp_path, "c.json", bad)
        assert main(["verify", "sv-tail", "--config", str(cfg), "--out", str(tmp_path), "--seed", "1"]) == 1
        assert _last_json(capsys)["error"] == "unknown_family"

    def test_stochastic_needs_seed(self, tmp_path, capsys):
        cfg = _write(tmp_path, "c.json", SMALL_TAIL)
        assert main(["verify", "sv-tail", "--config", str(cfg), "--out", str(tmp_path)]) == 1
        assert _last_json(capsys)["error"] == "config"

    def test_command_mismatch(self, tmp_path, capsys):
        cfg = _write(tmp_path, "c.json", SMALL_TAIL)
        assert main(["verify", "gap", "--config", str(cfg), "--out", str(tmp_path), "--seed", "1"]) == 1
        assert _last_json(capsys)["error"] == "config"

    def test_bad_constants(self, tmp_path, capsys):
        cfg = _write(tmp_path, "c.json", SMALL_TAIL)
        const = _write(tmp_path, "k.json", {"C_RV": -2})
        args = ["verify", "sv-tail", "--config", str(cfg), "--out", str(tmp_path), "--seed", "1", "--constants", str(const)]
        assert main(args) == 1
        assert _last_json(capsys)["error"] == "config"

    def test_insufficient_trials(self, tmp_path, capsys):
        bad = json.loads(json.dumps(SMALL_TAIL))
        bad["params"]["trials"] = 10
        cfg = _write(tmp_path, "c.json", bad)
        assert main(["verify", "sv-tail", "--config", str(cfg), "--out", str(tmp_path), "--seed", "1"]) == 1
        assert _last_json(capsys)["error"] == "insufficient_trials"

    def test_run_config_rejects_unknown_command(self, tmp_path):
        with pytest.raises(ConfigError):
            run_config({"command": "verify.nothing"}, tmp_path)


class TestSeeds:
    def _seed_of(self, out_dir):
        return json.loads((out_dir / "sv_tail.json").read_text())["meta"]["seed"]

    def test_precedence(self, tmp_path, monkeypatch):
        cfg = dict(SMALL_TAIL, seed=5)
        monkeypatch.setenv("SPECSHATTER_SEED", "9")
        run_config(cfg, tmp_path / "a", seed=3)
        run_config(cfg, tmp_path / "b")
        run_config(SMALL_TAIL, tmp_path / "c")
        assert [self._seed_of(tmp_path / d) for d in "abc"] == [3, 5, 9]

    def test_same_seed_same_bytes(self, tmp_path):
        run_config(SMALL_TAIL, tmp_path / "a", seed=2)
        run_config(SMALL_TAIL, tmp_path / "b", seed=2, threads=4)
        for name in ("sv_tail.csv", "sv_tail.json", "sv_tail.svg"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    def test_seed_changes_hash(self, tmp_path):
        run_config(SMALL_TAIL, tmp_path / "a", seed=2)
        run_config(SMALL_TAIL, tmp_path / "b", seed=3)
        ha = read_csv(tmp_path / "a" / "sv_tail.csv")[0]["config_hash"]
        hb = read_csv(tmp_path / "b" / "sv_tail.csv")[0]["config_hash"]
        assert ha != hb


class TestOutputs:
    def test_tail_artifacts(self, tmp_path):
        assert run_config(SMALL_TAIL, tmp_path, seed=1) == 0
        meta, cols = read_csv(tmp_path / "sv_tail.csv", required=("eps", "empirical", "band", "theoretical", "verdict"))
        assert meta["seed"] == "1"
        assert list(cols["verdict"]) == ["pass"] * 4
        text = (tmp_path / "sv_tail.json").read_text()
        assert "thread" not in text and "time" not in text
        assert (tmp_path / "sv_tail.svg").exists()

    def test_scientific_failure_exit_code(self, tmp_path):
        cfg = json.loads(json.dumps(SMALL_TAIL))
        cfg["params"]["slope_range"] = [5, 6]
        cfg["params"]["eps_grid"] = {"geomspace": [0.05, 0.3, 5]}
        assert run_config(cfg, tmp_path, seed=1) == 2

    def test_constants_are_recorded(self, tmp_path):
        run_config(SMALL_TAIL, tmp_path, seed=1, constants={"C_RV": 2.0})
        a = json.loads((tmp_path / "sv_tail.json").read_text())["meta"]["config_hash"]
        run_config(SMALL_TAIL, tmp_path / "x", seed=1)
        b = json.loads((tmp_path / "x" / "sv_tail.json").read_text())["meta"]["config_hash"]
        assert a != b

    def test_report_subcommand(self, tmp_path):
        run_config(SMALL_TAIL, tmp_path / "r", seed=1)
        args = ["report", str(tmp_path / "r" / "sv_tail.csv"), "--out", str(tmp_path / "p")]
        assert main(args) == 0
        assert (tmp_path / "p" / "sv_tail.svg").read_text().startswith("<?xml")

    def test_report_missing_columns(self, tmp_path, capsys):
        (tmp_path / "bad.csv").write_text("eps,empirical\n0.1,0.2\n")
        assert main(["report", str(tmp_path / "bad.csv"), "--out", str(tmp_path / "p")]) == 1
        assert _last_json(capsys)["error"] == "missing_columns"

    def test_pseudospec_grid(self, tmp_path):
        cfg = {"command": "pseudospec", "params": {"matrix": [[0, -1], [1, 0]], "region": [-2, 2, -2, 2], "resolution": 16, "eps": [0.5]}}
        assert run_config(cfg, tmp_path) == 0
        assert (tmp_path / "grid.csv").exists() and (tmp_path / "grid.svg").exists()
        out = json.loads((tmp_path / "pseudospec.json").read_text())
        assert out["grid_counts"]["0.5"] > 0

    def test_small_verify_commands(self, tmp_path):
        cases = [
            {"command": "verify.moments", "params": {"ensemble": {"n": 10}, "p": [1, 2], "trials": 200}},
            {"command": "verify.resolvent", "params": {"trials": 50, "invariance": {"n": 5, "k": 2, "delta": 1.0, "trials": 100}}},
            {"command": "verify.rank-inclusion", "params": {"pairs": 5, "resolution": 5}},
            {"command": "verify.submatrix", "params": {"trials": 10, "rectangular": {"n": 6, "k": 2, "trials": 10}}},
            {"command": "verify.dominance", "params": {"A1": {"zeros": 2}, "A2": {"identity": 2}, "trials": 500}},
        ]
        for i, cfg in enumerate(cases):
            assert run_config(cfg, tmp_path / str(i), seed=4) == 0, cfg["command"]
