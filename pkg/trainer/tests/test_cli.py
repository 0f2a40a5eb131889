"""Command-line flow: prepare -> train -> reconstruct -> metrics."""

import subprocess
import sys

import pytest

from edgetrainer.cli import EXIT_CONFIG, EXIT_OK, EXIT_RUNTIME, main

from conftest import SIZE


@pytest.fixture(scope="module")
def cli_flow(dataset_root, textures_dir, tmp_path_factory):
    """One full CLI pass; the dict carries the artifact paths."""
    base = tmp_path_factory.mktemp("cli_flow")
    pool, model_dir, recons = base / "pool", base / "model", base / "recons"

    rc = main(
        [
            "prepare",
            "--dataset", str(dataset_root),
            "--category", "widget",
            "--textures", str(textures_dir),
            "--out", str(pool),
            "--pool-size", "2",
            "--seed", "1",
            "--resize", str(SIZE),
            "--no-rotate",
        ]
    )
    assert rc == EXIT_OK

    rc = main(
        [
            "train",
            "--pool", str(pool),
            "--out", str(model_dir),
            "--epochs", "2",
            "--steps-per-epoch", "1",
            "--batch", "2",
            "--lr", "1e-3",
            "--resize", str(SIZE),
            "--log-every", "1",
        ]
    )
    assert rc == EXIT_OK

    rc = main(
        [
            "reconstruct",
            "--checkpoint", str(model_dir / "checkpoint.pt"),
            "--dataset", str(dataset_root),
            "--category", "widget",
            "--out", str(recons),
        ]
    )
    assert rc == EXIT_OK
    return {"pool": pool, "model": model_dir, "recons": recons, "base": base}


def test_flow_produces_all_artifacts(cli_flow):
    assert sorted(p.name for p in (cli_flow["pool"] / "edge").glob("*.png")) == [
        "00000.png",
        "00001.png",
    ]
    assert (cli_flow["model"] / "checkpoint.pt").is_file()
    assert (cli_flow["model"] / "loss_history.csv").is_file()
    assert (cli_flow["model"] / "train_config.json").is_file()
    assert len(list(cli_flow["recons"].rglob("*.png"))) == 4


def test_metrics_reexports_history(cli_flow):
    out = cli_flow["base"] / "hist.csv"
    rc = main(["metrics", "--checkpoint", str(cli_flow["model"] / "checkpoint.pt"), "--out", str(out)])
    assert rc == EXIT_OK
    lines = out.read_text().splitlines()
    assert lines[0] == "epoch,total,l2,ssim,lr"
    assert len(lines) == 3


def test_no_command_prints_usage(capsys):
    assert main([]) == EXIT_CONFIG
    assert "usage" in capsys.readouterr().err


def test_unknown_command_exits_two():
    with pytest.raises(SystemExit) as exc:
        main(["detonate"])
    assert exc.value.code == 2


def test_missing_pool_is_runtime_error(tmp_path, capsys):
    rc = main(["train", "--pool", str(tmp_path / "absent"), "--out", str(tmp_path / "out")])
    assert rc == EXIT_RUNTIME
    assert "error:" in capsys.readouterr().err


def test_invalid_config_value_exits_config(cli_flow, tmp_path, capsys):
    rc = main(
        [
            "train",
            "--pool", str(cli_flow["pool"]),
            "--out", str(tmp_path),
            "--epochs", "0",
        ]
    )
    assert rc == EXIT_CONFIG
    assert "error:" in capsys.readouterr().err


def test_prepare_missing_dataset_is_runtime_error(textures_dir, tmp_path, capsys):
    rc = main(
        [
            "prepare",
            "--dataset", str(tmp_path / "absent"),
            "--category", "widget",
            "--textures", str(textures_dir),
            "--out", str(tmp_path / "pool"),
            "--pool-size", "1",
        ]
    )
    assert rc == EXIT_RUNTIME
    assert "error:" in capsys.readouterr().err


def test_help_via_module_invocation():
    proc = subprocess.run(
        [sys.executable, "-m", "edgetrainer", "--help"],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0
    assert "prepare" in proc.stdout
