"""Command-line surface."""

import json

import pytest

from bfosp.cli import main


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


@pytest.fixture()
def config_file(tmp_path):
    path = tmp_path / "config.json"
    path.write_text(
        json.dumps(
            {
                "seed": 7,
                "prior": {"kind": "decreasing"},
                "acquisition": {"candidate_count": 100, "refine_steps": 3, "batch_size": 2},
            }
        )
    )
    return path


def test_init_ask_tell_status_export(tmp_path, config_file, capsys):
    campaign = tmp_path / "c.json"
    code, out, _ = run_cli(capsys, "init", "--config", str(config_file), "--campaign", str(campaign))
    assert code == 0
    assert json.loads(out)["current_order"] == 5

    code, out, _ = run_cli(capsys, "ask", "--campaign", str(campaign))
    assert code == 0
    suggestions = json.loads(out)["suggestions"]
    assert len(suggestions) == 2

    args = ["tell", "--campaign", str(campaign)]
    for s in suggestions:
        args += ["--token", s["token"], "--y", "0.5"]
    code, out, _ = run_cli(capsys, *args)
    assert code == 0
    assert json.loads(out)["iterations_completed"] == 1

    code, out, _ = run_cli(capsys, "status", "--campaign", str(campaign))
    assert json.loads(out)["observation_count"] == 2

    code, out, _ = run_cli(capsys, "export", "--campaign", str(campaign), "--what", "incumbent", "--grid", "21")
    assert code == 0
    assert len(json.loads(out)["values"]) == 21


def test_tell_mismatched_pairs_fail(tmp_path, config_file, capsys):
    campaign = tmp_path / "c.json"
    run_cli(capsys, "init", "--config", str(config_file), "--campaign", str(campaign))
    code, _, err = run_cli(capsys, "tell", "--campaign", str(campaign), "--token", "x")
    assert code == 1
    assert "same number" in json.loads(err)["error"]["message"]


def test_unknown_campaign_reports_error(tmp_path, capsys):
    code, _, err = run_cli(capsys, "status", "--campaign", str(tmp_path / "missing.json"))
    assert code == 1
    assert "no campaign file" in json.loads(err)["error"]["message"]


def test_run_synthetic_command(tmp_path, capsys):
    log = tmp_path / "run.jsonl"
    code, out, _ = run_cli(
        capsys,
        "run-synthetic",
        "--shape",
        "decreasing",
        "--iters",
        "2",
        "--seed",
        "3",
        "--log-out",
        str(log),
    )
    assert code == 0
    result = json.loads(out)
    assert result["iterations"] == 2
    assert len(log.read_text().strip().splitlines()) == 2
