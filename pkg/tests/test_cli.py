import yaml

from formtrack.cli import cli_main


def fast_scenario(tmp_path, name="fast.yaml", **sim_overrides):
    doc = {
        "graph": {"n": 3, "d": 2},
        "distances": {"default": 2.0},
        "leaders": {
            "positions": [[-1.0, 0.0], [1.0, 0.0]],
            "profile": {"kind": "sinusoid", "amplitude": 1.0, "frequencies": "random"},
        },
        "followers": {"positions": "random", "box": [[-2.0, -2.0], [2.0, 2.0]],
                      "frames": "random"},
        "control": {"law": "basic", "k": 1.0, "alpha": 0.5, "gamma": 2.0, "eps": 1e-3},
        "sim": {"dt": 1e-3, "t_end": 1.5, "integrator": "rk4", "seed": 5},
    }
    doc["sim"].update(sim_overrides)
    path = tmp_path / name
    path.write_text(yaml.safe_dump(doc))
    return path


class TestTheta:
    def test_symmetric_case_output(self, capsys):
        assert cli_main(["theta", "--a", "1", "--b", "2", "--c", "2"]) == 0
        out = capsys.readouterr().out
        assert "basin threshold = 4" in out
        for root in ("-1", "0", "1"):
            assert f"x={root}" in out.replace(" ", "")

    def test_degenerate_triangle_fails(self, capsys):
        assert cli_main(["theta", "--a", "2", "--b", "1", "--c", "1"]) == 1
        assert "error" in capsys.readouterr().err


class TestCheck:
    def test_valid_scenario(self, tmp_path, capsys):
        path = fast_scenario(tmp_path)
        assert cli_main(["check", str(path)]) == 0
        assert "valid" in capsys.readouterr().out

    def test_malformed_file(self, tmp_path, capsys):
        path = tmp_path / "bad.yaml"
        path.write_text("graph: {n: 1, d: 2}\n")
        assert cli_main(["check", str(path)]) == 1
        assert "error" in capsys.readouterr().err

    def test_unknown_scenario(self, capsys):
        assert cli_main(["check", "nope.yaml"]) == 1


class TestSimulateCommand:
    def test_produces_artifacts(self, tmp_path, capsys):
        scen = fast_scenario(tmp_path)
        out = tmp_path / "out"
        assert cli_main(["simulate", str(scen), "--out", str(out)]) == 0
        for name in ("trajectory.csv", "metrics.yaml", "trajectories.svg", "errors.svg"):
            assert (out / name).exists(), name

    def test_nan_initial_state_is_runtime_failure(self, tmp_path, capsys):
        doc = yaml.safe_load(fast_scenario(tmp_path).read_text())
        doc["followers"]["positions"] = [[float("nan"), 0.0]]
        path = tmp_path / "nan.yaml"
        path.write_text(yaml.safe_dump(doc))
        assert cli_main(["simulate", str(path), "--out", str(tmp_path / "o")]) == 2


class TestPlotCommand:
    def test_replot_from_csv(self, tmp_path):
        scen = fast_scenario(tmp_path)
        out = tmp_path / "out"
        assert cli_main(["simulate", str(scen), "--out", str(out)]) == 0
        replot = tmp_path / "replot"
        rc = cli_main([
            "plot", str(out / "trajectory.csv"),
            "--scenario", str(scen), "--out", str(replot),
        ])
        assert rc == 0
        assert (replot / "trajectories.svg").exists()
        assert (replot / "errors.svg").exists()

    def test_replot_without_scenario(self, tmp_path, capsys):
        scen = fast_scenario(tmp_path)
        out = tmp_path / "out"
        cli_main(["simulate", str(scen), "--out", str(out)])
        replot = tmp_path / "replot2"
        assert cli_main(["plot", str(out / "trajectory.csv"), "--out", str(replot)]) == 0
        assert (replot / "trajectories.svg").exists()
        assert not (replot / "errors.svg").exists()


class TestSweep:
    def test_gain_grid(self, tmp_path, capsys):
        scen = fast_scenario(tmp_path, t_end=0.5)
        out = tmp_path / "sweep"
        rc = cli_main([
            "sweep", str(scen), "--param", "k=0.5:1.5:0.5",
            "--out", str(out), "--delta", "5e-2",
        ])
        assert rc == 0
        rows = yaml.safe_load((out / "sweep.yaml").read_text())
        assert len(rows) == 3
        assert [r["params"]["k"] for r in rows] == [0.5, 1.0, 1.5]

    def test_two_parameter_grid(self, tmp_path):
        scen = fast_scenario(tmp_path, t_end=0.2)
        out = tmp_path / "sweep2"
        rc = cli_main([
            "sweep", str(scen),
            "--param", "k=1:2:1", "--param", "alpha=0.4:0.6:0.2",
            "--out", str(out),
        ])
        assert rc == 0
        rows = yaml.safe_load((out / "sweep.yaml").read_text())
        assert len(rows) == 4

    def test_rejects_unknown_parameter(self, tmp_path, capsys):
        scen = fast_scenario(tmp_path, t_end=0.2)
        assert cli_main(["sweep", str(scen), "--param", "dt=0.1:0.2:0.1"]) == 1


class TestOutputDirEnvVar:
    def test_default_output_from_environment(self, tmp_path, monkeypatch):
        scen = fast_scenario(tmp_path, t_end=0.2)
        target = tmp_path / "envout"
        monkeypatch.setenv("FORMTRACK_OUT", str(target))
        assert cli_main(["simulate", str(scen)]) == 0
        assert (target / "trajectory.csv").exists()


class TestDeterminism:
    def test_same_seed_byte_identical_csv(self, tmp_path):
        scen = fast_scenario(tmp_path)
        out1, out2 = tmp_path / "r1", tmp_path / "r2"
        assert cli_main(["simulate", str(scen), "--out", str(out1)]) == 0
        assert cli_main(["simulate", str(scen), "--out", str(out2)]) == 0
        assert (out1 / "trajectory.csv").read_bytes() == (out2 / "trajectory.csv").read_bytes()
