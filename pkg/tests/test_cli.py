import json

import pytest
from click.testing import CliRunner

from pdit_qkd.cli import cli


@pytest.fixture
def runner():
    return CliRunner()


def _json(result) -> dict:
    assert result.exit_code == 0, result.output
    return json.loads(result.output)


class TestRate:
    def test_perfect_channel(self, runner):
        data = _json(runner.invoke(cli, ["rate", "--protocol", "bb84", "--Q", "0", "--q", "0"]))
        assert data["command"] == "rate"
        assert data["result"]["R"] == pytest.approx(1.0)

    def test_bb84_limit_without_added_noise(self, runner):
        data = _json(runner.invoke(cli, ["rate", "--Q", "0.11", "--q", "0"]))
        assert data["result"]["R"] == pytest.approx(0.0, abs=2e-3)

    def test_six_state_with_optimised_noise(self, runner):
        data = _json(
            runner.invoke(cli, ["rate", "--protocol", "six-state", "--Q", "0.12", "--optimize-q"])
        )
        assert data["result"]["R"] > 0
        assert data["spec"]["optimize_q"] is True

    def test_custom_distribution(self, runner):
        data = _json(
            runner.invoke(
                cli, ["rate", "--protocol", "custom", "--distribution", "1,0,0,0", "--q", "0"]
            )
        )
        assert data["result"]["R"] == pytest.approx(1.0)

    def test_bad_distribution(self, runner):
        result = runner.invoke(cli, ["rate", "--protocol", "custom", "--distribution", "0.5,0.5"])
        assert result.exit_code == 2

    def test_csv_output(self, runner):
        result = runner.invoke(cli, ["rate", "--Q", "0.05", "--format", "csv"])
        assert result.exit_code == 0, result.output
        header, row = result.output.strip().splitlines()
        assert "R" in header.split(",")
        assert "lambda_plus.0" in header.split(",")
        assert len(row.split(",")) == len(header.split(","))


class TestThreshold:
    def test_bb84(self, runner):
        data = _json(runner.invoke(cli, ["threshold", "--protocol", "bb84"]))
        assert data["result"]["threshold"] == pytest.approx(0.124, abs=5e-4)

    def test_fixed_policy(self, runner):
        data = _json(
            runner.invoke(cli, ["threshold", "--protocol", "bb84", "--q-policy", "fixed", "--q", "0"])
        )
        assert data["result"]["threshold"] == pytest.approx(0.110, abs=5e-4)


def test_curve_rows(runner):
    data = _json(runner.invoke(cli, ["curve", "--Q-start", "0", "--Q-stop", "0.1", "--points", "5"]))
    assert [row["Q"] for row in data["result"]] == pytest.approx([0.0, 0.025, 0.05, 0.075, 0.1])
    assert data["result"][0]["R"] == pytest.approx(1.0)


class TestSimulate:
    def test_noiseless_block(self, runner):
        data = _json(runner.invoke(cli, ["simulate", "--n", "2", "--Q", "0"]))
        assert data["result"]["fidelity"] == pytest.approx(1.0)
        assert data["result"]["epsilon"] == pytest.approx(0.0, abs=1e-6)

    def test_random_code_needs_seed(self, runner):
        result = runner.invoke(
            cli, ["simulate", "--n", "2", "--phase-code", "random", "--phase-checks", "1"]
        )
        assert result.exit_code == 2

    def test_budget_error(self, runner):
        result = runner.invoke(cli, ["simulate", "--n", "4", "--Q", "0.05", "--bit-code", "empty"])
        assert result.exit_code == 3
        assert "budget" in result.output.lower()


class TestPgm:
    def test_deterministic_output(self, runner):
        args = ["pgm", "--n", "6", "--seed", "7", "--trials", "5"]
        first = runner.invoke(cli, args)
        second = runner.invoke(cli, args)
        assert first.exit_code == 0, first.output
        assert first.output == second.output

    def test_seed_required(self, runner):
        result = runner.invoke(cli, ["pgm", "--n", "4"])
        assert result.exit_code == 2


def test_verify_pdit(runner):
    data = _json(runner.invoke(cli, ["verify-pdit", "--trials", "3", "--seed", "1"]))
    assert data["result"]["max_key_security_distance"] <= 1e-9
    assert len(data["result"]["trials"]) == 3


class TestConfigFiles:
    def test_json_config_with_flag_override(self, runner, tmp_path):
        config = tmp_path / "rate.json"
        config.write_text(json.dumps({"command": "rate", "protocol": "six-state", "Q": 0.05, "q": 0.1}))
        data = _json(runner.invoke(cli, ["rate", "--config", str(config), "--q", "0"]))
        assert data["spec"]["protocol"] == "six-state"
        assert data["spec"]["Q"] == 0.05
        assert data["spec"]["q"] == 0.0

    def test_toml_config(self, runner, tmp_path):
        config = tmp_path / "sim.toml"
        config.write_text('n = 2\nQ = 0.0\n\n[bit_code]\nkind = "full"\n')
        data = _json(runner.invoke(cli, ["simulate", "--config", str(config)]))
        assert data["spec"]["n"] == 2

    def test_unknown_key_is_schema_error(self, runner, tmp_path):
        config = tmp_path / "bad.json"
        config.write_text(json.dumps({"Q": 0.05, "speed": 3}))
        result = runner.invoke(cli, ["rate", "--config", str(config)])
        assert result.exit_code == 2

    def test_output_file(self, runner, tmp_path):
        target = tmp_path / "out.json"
        result = runner.invoke(cli, ["rate", "--Q", "0.02", "--output", str(target)])
        assert result.exit_code == 0, result.output
        assert json.loads(target.read_text())["command"] == "rate"
