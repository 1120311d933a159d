"""End-to-end tests of the command-line interface."""

import json

import pytest

from hamlearn.cli import EXIT_CONFIG_ERROR, EXIT_OK, main


@pytest.fixture
def exp_config(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(
        json.dumps(
            {
                "preset": "generic",
                "n_qubits": 2,
                "num_instances": 2,
                "seed": 3,
                "m_terms": 2,
            }
        )
    )
    return path


class TestGenSolve:
    def test_round_trip(self, tmp_path, exp_config, capsys):
        out_dir = tmp_path / "instances"
        assert main(["gen", "--config", str(exp_config), "--out", str(out_dir)]) == EXIT_OK
        assert (out_dir / "basis_0000.json").exists()
        assert (out_dir / "record_0001.json").exists()

        result_path = tmp_path / "result.json"
        code = main(
            [
                "solve",
                "--basis",
                str(out_dir / "basis_0000.json"),
                "--measurements",
                str(out_dir / "record_0000.json"),
                "--out",
                str(result_path),
                "--seed",
                "0",
            ]
        )
        assert code == EXIT_OK
        payload = json.loads(result_path.read_text())
        assert payload["converged"]
        assert payload["f_final"] < 1e-8
        assert payload["report"]["abs_fidelity"] > 0.99

    def test_solve_prints_without_out(self, tmp_path, exp_config, capsys):
        out_dir = tmp_path / "instances"
        main(["gen", "--config", str(exp_config), "--out", str(out_dir)])
        capsys.readouterr()  # drop the gen confirmation line
        code = main(
            [
                "solve",
                "--basis",
                str(out_dir / "basis_0000.json"),
                "--measurements",
                str(out_dir / "record_0000.json"),
                "--seed",
                "0",
            ]
        )
        assert code == EXIT_OK
        payload = json.loads(capsys.readouterr().out)
        assert "x_opt" in payload


class TestExp:
    def test_runs_suite(self, tmp_path, exp_config, capsys):
        out_path = tmp_path / "rows.jsonl"
        code = main(["exp", "--config", str(exp_config), "--out", str(out_path)])
        assert code == EXIT_OK
        lines = [l for l in out_path.read_text().splitlines() if l]
        assert len(lines) == 2
        summary = json.loads(capsys.readouterr().out)
        assert summary["count"] == 2

    def test_summarize(self, tmp_path, exp_config, capsys):
        out_path = tmp_path / "rows.jsonl"
        main(["exp", "--config", str(exp_config), "--out", str(out_path)])
        capsys.readouterr()
        assert main(["summarize", "--in", str(out_path)]) == EXIT_OK
        summary = json.loads(capsys.readouterr().out)
        assert summary["count"] == 2

    def test_csv_format(self, tmp_path, exp_config, capsys):
        out_path = tmp_path / "rows.csv"
        code = main(["exp", "--config", str(exp_config), "--out", str(out_path), "--format", "csv"])
        assert code == EXIT_OK
        assert out_path.read_text().startswith("instance_id,")


class TestErrors:
    def test_missing_config(self, tmp_path, capsys):
        code = main(["exp", "--config", str(tmp_path / "nope.json"), "--out", str(tmp_path / "o")])
        assert code == EXIT_CONFIG_ERROR
        assert "error:" in capsys.readouterr().err

    def test_invalid_config(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps({"preset": "generic", "n_qubits": 2, "num_instances": 1}))
        code = main(["exp", "--config", str(bad), "--out", str(tmp_path / "o")])
        assert code == EXIT_CONFIG_ERROR

    def test_exp_without_out(self, tmp_path, exp_config, capsys):
        code = main(["exp", "--config", str(exp_config)])
        assert code == EXIT_CONFIG_ERROR
