import json

from click.testing import CliRunner

from countloop.cli import main


class TestRunCommand:
    def test_sim_run(self, tmp_path):
        runner = CliRunner()
        out = tmp_path / "out"
        result = runner.invoke(main, [
            "run", "--prompt", "12 cups on a table", "--res", "512",
            "--seed", "42", "--out", str(out),
        ])
        assert result.exit_code == 0, result.output
        assert "converged:   True" in result.output
        assert (out / "run.json").exists()
        data = json.loads((out / "run.json").read_text())
        assert data["prompt_spec"]["targets"] == {"cup": 12}

    def test_unparseable_prompt_fails_cleanly(self):
        runner = CliRunner()
        result = runner.invoke(main, ["run", "--prompt", "pure scenery"])
        assert result.exit_code != 0
        assert "Error" in result.output

    def test_remote_requires_url(self):
        runner = CliRunner()
        result = runner.invoke(main, [
            "run", "--prompt", "2 cats", "--backend", "remote",
        ], env={"COUNTLOOP_BRIDGE_URL": ""})
        assert result.exit_code != 0


class TestBenchCommands:
    def test_gen_then_run(self, tmp_path):
        runner = CliRunner()
        suite_file = tmp_path / "suite.jsonl"
        result = runner.invoke(main, [
            "bench", "gen", "--kind", "S", "--count-min", "5",
            "--count-max", "20", "-n", "6", "--seed", "1",
            "--out", str(suite_file),
        ])
        assert result.exit_code == 0, result.output
        assert suite_file.exists()
        assert len(suite_file.read_text().strip().splitlines()) == 6

        out_dir = tmp_path / "bench"
        result = runner.invoke(main, [
            "bench", "run", "--suite", str(suite_file), "--res", "512",
            "--parallelism", "2", "--out", str(out_dir),
        ])
        assert result.exit_code == 0, result.output
        assert (out_dir / "summary.json").exists()
        assert (out_dir / "summary.txt").exists()
        summary = json.loads((out_dir / "summary.json").read_text())
        assert summary["aggregates"]["accuracy"] == 1.0

    def test_gen_with_categories_file(self, tmp_path):
        cats = tmp_path / "cats.txt"
        cats.write_text("vase\nteacup\n")
        suite_file = tmp_path / "suite.jsonl"
        runner = CliRunner()
        result = runner.invoke(main, [
            "bench", "gen", "--kind", "M", "--count-min", "2",
            "--count-max", "9", "-n", "4", "--categories-file", str(cats),
            "--out", str(suite_file),
        ])
        assert result.exit_code == 0, result.output
        for line in suite_file.read_text().strip().splitlines():
            record = json.loads(line)
            assert set(record["targets"]) <= {"vase", "teacup"}
