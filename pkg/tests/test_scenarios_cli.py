import json

import numpy as np
import pytest

from bfnlab import cli
from bfnlab.config import parse_config
from bfnlab.experiment import EXIT_CONFIG, EXIT_OK, build_grid, build_state, run_experiment, write_outputs
from bfnlab.scenarios import SCENARIOS, get_scenario, list_scenarios, scenario_text


class TestRegistry:
    def test_count_and_required_names(self):
        names = [row[0] for row in list_scenarios()]
        assert len(names) >= 14
        for required in ("lorenz-windowed-gamma", "nse-variant-comparison", "burgers-zero-obs"):
            assert required in names

    @pytest.mark.parametrize("name", sorted(SCENARIOS))
    def test_every_scenario_validates_and_round_trips(self, name):
        cfg = get_scenario(name)
        assert cfg.name == name
        assert cfg.figure
        from bfnlab.config import format_config
        assert parse_config(format_config(cfg)) == cfg

    def test_burgers_partial(self):
        cfg = get_scenario("burgers-partial-M16")
        assert cfg.observation.mode_cutoff == 16 and cfg.bfn.mu == 100.0
        grid = build_grid(cfg)
        u0 = build_state(cfg.reference.initial, cfg, grid)
        x = grid.x
        np.testing.assert_allclose(grid.inverse(u0), np.cos(np.pi * x) + 0.05 * np.cos(30 * np.pi * x), atol=1e-14)

    def test_nse_substitutions_recorded(self):
        cfg = get_scenario("nse-variant-comparison")
        assert cfg.grid.n_points == 128 and cfg.model.grashof == 5e4 and cfg.observation.mode_cutoff == 20
        assert cfg.time.t_end == 0.05 and len(cfg.substitutions) >= 4

    def test_unknown(self):
        with pytest.raises(KeyError):
            scenario_text("nope")


class TestExperiment:
    def test_heat_oracle_deviation(self):
        result = run_experiment(get_scenario("heat-oracle"))
        assert result.variants[0].metrics["oracle_max_relative_deviation"] <= 1e-8
        assert result.exit_code == EXIT_OK

    def test_lorenz_pathological_constant_summary(self, tmp_path):
        cfg = get_scenario("lorenz-pathological").with_override("time.t_end", "0.1")
        result = run_experiment(cfg.with_override("output.record_every", "100"))
        manifest = write_outputs(result, tmp_path)
        rows = np.loadtxt(tmp_path / "summary.tsv", skiprows=1)
        assert rows.shape[0] == 6
        np.testing.assert_allclose(rows[:, 1], rows[0, 1], rtol=0, atol=1e-12)
        assert manifest["status"] == "ok"

    def test_twins(self):
        result = run_experiment(get_scenario("burgers-twins").with_override("time.t_end", "0.01"))
        assert result.metrics["twin_records_identical"]
        assert result.variants[0].metrics["twin_trajectories_identical"]

    def test_synchronization(self):
        cfg = get_scenario("lorenz-synchronization").with_override("time.dt", "1e-4")
        result = run_experiment(cfg.with_override("output.record_every", "100"))
        m = result.variants[0].metrics
        assert m["round_trip_error"] <= 1e-10
        assert m["final_error"] == pytest.approx(np.exp(-8 / 3), rel=1e-6)

    def test_outputs_and_manifest(self, tmp_path):
        cfg = get_scenario("burgers-partial-M16").with_override("time.t_end", "0.01")
        manifest = write_outputs(run_experiment(cfg), tmp_path)
        for name in ("errors.tsv", "summary.tsv", "recovered_spectrum.tsv", "recovered_physical.tsv",
                     "manifest.json"):
            assert (tmp_path / name).is_file()
        header = (tmp_path / "errors.tsv").read_text().splitlines()[0].split("\t")
        assert header[:3] == ["iteration_time", "leg", "backward"]
        data = json.loads((tmp_path / "manifest.json").read_text())
        assert data == json.loads(json.dumps(manifest))
        assert parse_config(data["config_text"]) == cfg
        assert data["config"]["model"]["kind"] == "burgers"
        assert data["code_version"]
        line = (tmp_path / "summary.tsv").read_text().splitlines()[1]
        assert all(format(float(tok), ".17g") == tok for tok in line.split("\t")[1:])

    def test_multiple_variants_use_subdirectories(self, tmp_path):
        text = scenario_text("burgers-partial-M16-viscous")
        cfg = parse_config(text, ["time.t_end=0.01", "bfn.variants=standard | truncated_diffusion(50)",
                                  "bfn.iterations=1"])
        manifest = write_outputs(run_experiment(cfg), tmp_path)
        dirs = [v["directory"] for v in manifest["variants"]]
        assert len(set(dirs)) == 2
        for d in dirs:
            assert (tmp_path / d / "errors.tsv").is_file()


class TestCli:
    def test_list(self, capsys):
        assert cli.main(["list"]) == EXIT_OK
        out = capsys.readouterr().out
        assert "lorenz-windowed-gamma" in out and "substitution:" in out

    def test_validate(self, tmp_path, capsys):
        assert cli.main(["validate", "heat-oracle"]) == EXIT_OK
        bad = tmp_path / "bad.ini"
        bad.write_text("[model]\nkind = lorenz\n[observation]\nwindow_fraction = 1.5\n")
        assert cli.main(["validate", str(bad)]) == EXIT_CONFIG
        assert "observation.window_fraction" in capsys.readouterr().err

    def test_missing_target(self):
        assert cli.main(["run", "no-such-thing", "--out-dir", "/tmp/never"]) == EXIT_CONFIG

    def test_oracle(self, capsys):
        assert cli.main(["oracle", "transport-oracle"]) == EXIT_OK
        out = capsys.readouterr().out
        value = float(out.strip().split("=")[-1])
        assert value <= 1e-8
        assert cli.main(["oracle", "burgers-zero-obs"]) == EXIT_CONFIG

    def test_run_is_deterministic(self, tmp_path):
        args = ["run", "heat-oracle", "burgers-zero-obs", "--override", "bfn.iterations=2"]
        assert cli.main(args + ["--out-dir", str(tmp_path / "a")]) == EXIT_OK
        assert cli.main(args + ["--out-dir", str(tmp_path / "b"), "--threads", "2"]) == EXIT_OK
        for name in ("heat-oracle", "burgers-zero-obs"):
            for f in ("errors.tsv", "summary.tsv", "recovered_spectrum.tsv", "recovered_physical.tsv",
                      "manifest.json"):
                assert (tmp_path / "a" / name / f).read_bytes() == (tmp_path / "b" / name / f).read_bytes()

    def test_env_out_dir(self, tmp_path, monkeypatch):
        monkeypatch.setenv(cli.OUT_DIR_ENV, str(tmp_path))
        assert cli.main(["run", "transport-zero-obs", "--override", "bfn.iterations=1"]) == EXIT_OK
        data = json.loads((tmp_path / "transport-zero-obs" / "manifest.json").read_text())
        assert data["metrics"]["observations_identically_zero"] is True

    def test_config_file_run(self, tmp_path):
        cfg_file = tmp_path / "heat.ini"
        cfg_file.write_text(scenario_text("heat-oracle").replace("name = heat-oracle", "name = my-heat"))
        assert cli.main(["run", str(cfg_file), "--out-dir", str(tmp_path / "out"),
                         "--override", "bfn.iterations=1"]) == EXIT_OK
        assert (tmp_path / "out" / "my-heat" / "manifest.json").is_file()

    def test_bad_threads(self):
        assert cli.main(["run", "heat-oracle", "--threads", "0"]) == EXIT_CONFIG


class TestReadme:
    def test_config_exemplars_validate(self):
        import re
        from pathlib import Path
        text = (Path(__file__).resolve().parents[1] / "README.md").read_text(encoding="utf-8")
        blocks = re.findall(r"```ini\n(.*?)```", text, flags=re.S)
        assert len(blocks) == 5
        kinds = {parse_config(b).model.kind for b in blocks}
        assert kinds == {"lorenz", "transport", "burgers", "kdv_viscous", "nse"}
