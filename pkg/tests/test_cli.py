import json

from qgate.cli import EXIT_CONFIG, EXIT_OK, main


class TestCli:
    def test_gate_run(self, capsys, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"gate": "phase", "t_factor": 60.0}))
        out_csv = tmp_path / "gate.csv"
        path_json = tmp_path / "path.json"
        code = main(["gate", "--config", str(cfg), "--out", str(out_csv),
                     "--dump-path", str(path_json)])
        assert code == EXIT_OK
        assert "error" in capsys.readouterr().out
        assert out_csv.read_text().startswith("swept,error,leakage,wall_ms")
        doc = json.loads(path_json.read_text())
        assert doc["names"] == ["omega", "phi"]

    def test_cnot_gate_dumps_both_paths(self, capsys, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"gate": "cnot", "t_factor": 50.0,
                                   "steps_per_unit": 16.0}))
        path_json = tmp_path / "paths.json"
        code = main(["gate", "--config", str(cfg), "--dump-path", str(path_json)])
        assert code == EXIT_OK
        doc = json.loads(path_json.read_text())
        assert isinstance(doc, list) and len(doc) == 2

    def test_sweep_with_outputs(self, capsys, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({
            "experiment": "fig2a", "gate": "phase", "grid_points": 2,
            "grid_start": 30.0, "grid_stop": 60.0}))
        out_csv, out_svg = tmp_path / "a.csv", tmp_path / "a.svg"
        code = main(["fig2a", "--config", str(cfg), "--out", str(out_csv),
                     "--svg", str(out_svg)])
        assert code == EXIT_OK
        assert len(out_csv.read_text().splitlines()) == 3
        assert out_svg.read_text().startswith("<svg")

    def test_unknown_config_key_exits_2(self, capsys, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"experiment": "fig2a", "nonsense": True}))
        assert main(["fig2a", "--config", str(cfg)]) == EXIT_CONFIG

    def test_wrong_experiment_exits_2(self, capsys, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"experiment": "fig2b"}))
        assert main(["fig2a", "--config", str(cfg)]) == EXIT_CONFIG

    def test_bad_gate_value_exits_2(self, capsys, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"gate": "toffoli"}))
        assert main(["gate", "--config", str(cfg)]) == EXIT_CONFIG

    def test_verify_passes(self, capsys, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"t_factor": 40.0, "seeds": [0]}))
        assert main(["verify", "--config", str(cfg)]) == EXIT_OK
        assert "all timing constraints hold" in capsys.readouterr().out

    def test_robustness_cli_flags(self, capsys, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"experiment": "robustness", "count": 1,
                                   "t_factor": 50.0}))
        code = main(["robustness", "--config", str(cfg), "--steps", "16",
                     "--seed", "5", "--workers", "1"])
        assert code == EXIT_OK
