import csv
import json
from pathlib import Path

import pytest

from sobolev_lab.cli import COLUMNS, SCENARIOS, load_config, main, run_scenario
from sobolev_lab.errors import ConfigInvalid

CONFIGS = sorted((Path(__file__).resolve().parents[1] / "configs").glob("*.json"))


def write_config(tmp_path, **raw):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(raw))
    return str(path)


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def run(config, out, *extra):
    return main(["run", "--config", str(config), "--out", str(out), *extra])


BASE = {
    "scenario": "solve-elliptic",
    "grid.n": 1,
    "grid.N": 16,
    "operator.diag": [1.0],
    "problem.l": [1],
    "sweep.t": [1.0],
    "sweep.lambda": [1.0],
    "forcing.kind": "cos",
    "output.name": "probe",
}


class TestGolden:
    def test_elliptic_model_value(self, tmp_path):
        assert run(CONFIGS[0].parent / "elliptic_model.json", tmp_path) == 0
        rows = read_rows(tmp_path / "elliptic_model.csv")
        assert len(rows) == 1 and rows[0]["status"] == "ok"
        assert float(rows[0]["empirical_constant"]) == pytest.approx(4 / 3, abs=1e-6)

    @pytest.mark.parametrize("config", CONFIGS, ids=lambda p: p.stem)
    def test_byte_identical_rerun(self, config, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        assert run(config, a) == 0 and run(config, b) == 0
        for name in (config.stem + ".csv", config.stem + ".meta.json"):
            assert (a / name).read_bytes() == (b / name).read_bytes()

    @pytest.mark.parametrize("config", CONFIGS, ids=lambda p: p.stem)
    def test_header_matches_schema(self, config, tmp_path):
        assert run(config, tmp_path) == 0
        scenario = json.loads(config.read_text())["scenario"]
        header = (tmp_path / (config.stem + ".csv")).read_text().split("\n", 1)[0]
        assert header == ",".join(COLUMNS[scenario])

    def test_threads_do_not_change_output(self, tmp_path):
        config = CONFIGS[0].parent / "coercivity_sweep.json"
        assert run(config, tmp_path / "one") == 0
        assert run(config, tmp_path / "four", "--threads", "4") == 0
        assert (tmp_path / "one" / "coercivity_sweep.csv").read_bytes() == (tmp_path / "four" / "coercivity_sweep.csv").read_bytes()


class TestRows:
    def test_pole_is_a_status_row(self, tmp_path):
        assert run(CONFIGS[0].parent / "resolvent_pole.json", tmp_path) == 0
        statuses = {r["lambda_re"]: r["status"] for r in read_rows(tmp_path / "resolvent_pole.csv")}
        assert statuses["-2.0"] == "SingularResolvent"
        assert statuses["1.0"] == "ok"

    def test_seed_override_recorded(self, tmp_path):
        cfg = dict(BASE, **{"forcing.kind": "random", "forcing.count": 2})
        path = write_config(tmp_path, **cfg)
        assert run(path, tmp_path / "s1", "--seed", "7") == 0
        assert run(path, tmp_path / "s2", "--seed", "8") == 0
        meta = json.loads((tmp_path / "s1" / "probe.meta.json").read_text())
        assert meta["metadata"]["seed"] == 7
        assert (tmp_path / "s1" / "probe.csv").read_bytes() != (tmp_path / "s2" / "probe.csv").read_bytes()

    def test_metadata_echo(self, tmp_path):
        path = write_config(tmp_path, **BASE)
        report = run_scenario(load_config(path))
        assert report.metadata["config"]["scenario"] == "solve-elliptic"
        assert "numpy" in report.metadata["versions"]


class TestValidation:
    def test_empty_sweep(self, tmp_path, capsys, monkeypatch):
        monkeypatch.setenv("NO_COLOR", "1")
        path = write_config(tmp_path, **dict(BASE, **{"sweep.lambda": []}))
        assert run(path, tmp_path / "out") == 2
        record = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
        assert record["error"] == "ConfigInvalid" and record["exit_code"] == 2
        assert not (tmp_path / "out").exists()

    def test_unknown_key(self, tmp_path):
        with pytest.raises(ConfigInvalid):
            load_config(write_config(tmp_path, **dict(BASE, **{"grid.M": 3})))

    def test_unknown_scenario(self, tmp_path):
        with pytest.raises(ConfigInvalid):
            load_config(write_config(tmp_path, **dict(BASE, scenario="serve")))

    def test_bad_seed(self, tmp_path):
        with pytest.raises(ConfigInvalid):
            load_config(write_config(tmp_path, **dict(BASE, seed=-1)))

    def test_downstream_constraint(self, tmp_path):
        # |alpha : 2l| = 1 is outside the admissible range
        cfg = dict(BASE, **{"problem.lower": [{"alpha": [2]}]})
        with pytest.raises(ConfigInvalid):
            load_config(write_config(tmp_path, **cfg))

    def test_mu_zero_endpoint(self, tmp_path):
        cfg = {
            "scenario": "check-embedding", "grid.n": 1, "grid.N": 32, "operator.diag": [1.0],
            "problem.l": [2], "problem.alpha": [0], "exponents.p": [1.0], "sweep.mu": [0.0],
        }
        with pytest.raises(ConfigInvalid):
            load_config(write_config(tmp_path, **cfg))

    def test_validate_command(self, tmp_path, capsys):
        assert main(["validate", "--config", write_config(tmp_path, **BASE)]) == 0
        assert json.loads(capsys.readouterr().out) == {"scenario": "solve-elliptic", "valid": True}

    def test_list_scenarios(self, capsys):
        assert main(["list-scenarios"]) == 0
        names = [line.split("\t")[0] for line in capsys.readouterr().out.splitlines()]
        assert names == sorted(SCENARIOS) and len(names) == 7
