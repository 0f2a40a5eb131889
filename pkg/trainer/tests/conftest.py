"""Shared fixtures for the trainer suite.

Builds one miniature dataset tree, one texture directory, one synthesized
corruption pool, and one trained checkpoint per session. Training is the
expensive step (a couple hundred optimizer steps on CPU), so every test
that needs a checkpoint shares the same session-scoped run.

The scorer CLI `edgescan` must be on PATH: the pool fixture and the
cross-component tests drive everything through it, never through imports.
"""

from __future__ import annotations

import hashlib
import shutil
import subprocess
from pathlib import Path

import numpy as np
import pytest
from PIL import Image

from edgetrainer.pool import prepare_pool
from edgetrainer.train import TrainConfig, train

SIZE = 32  # divisible by 16, the smallest the UNet accepts comfortably


def pattern_image(i: int, size: int = SIZE) -> np.ndarray:
    """Deterministic smooth RGB pattern; the index varies phase and period."""
    yy, xx = np.mgrid[0:size, 0:size].astype(np.float64)
    img = np.stack(
        [
            127 + 100 * np.sin(xx / (3 + i % 5) + i),
            127 + 100 * np.cos(yy / (4 + i % 3)),
            (xx + yy + 10 * i) % 256,
        ],
        axis=-1,
    )
    return np.clip(img, 0, 255).astype(np.uint8)


def texture_image(i: int, size: int = 64) -> np.ndarray:
    if i % 2 == 0:
        rng = np.random.default_rng(1000 + i)
        return rng.integers(0, 256, (size, size, 3), dtype=np.uint8)
    yy, xx = np.mgrid[0:size, 0:size]
    checker = ((xx // 8 + yy // 8) % 2 * 255).astype(np.uint8)
    return np.stack([checker, 255 - checker, checker], axis=-1)


def save_rgb(path: Path, arr: np.ndarray) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(arr).save(path)


def save_gray(path: Path, arr: np.ndarray) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(arr, mode="L").save(path)


def build_dataset(
    root: Path,
    category: str = "widget",
    n_train: int = 4,
    n_test_good: int = 2,
    n_test_defect: int = 2,
    size: int = SIZE,
) -> Path:
    """Standard layout: train/good, test/{good,scratch}, ground_truth/scratch."""
    cat = root / category
    for i in range(n_train):
        save_rgb(cat / "train" / "good" / f"{i:03d}.png", pattern_image(i, size))
    for i in range(n_test_good):
        save_rgb(cat / "test" / "good" / f"{i:03d}.png", pattern_image(10 + i, size))
    for i in range(n_test_defect):
        img = pattern_image(20 + i, size)
        img[size // 4 : size // 2, size // 3 : size - 8] = (250, 10, 10)
        save_rgb(cat / "test" / "scratch" / f"{i:03d}.png", img)
        mask = np.zeros((size, size), np.uint8)
        mask[size // 4 : size // 2, size // 3 : size - 8] = 255
        save_gray(cat / "ground_truth" / "scratch" / f"{i:03d}_mask.png", mask)
    return root


def tree_digest(root: Path, skip: tuple[str, ...] = ()) -> str:
    """Order-independent content hash of a directory tree."""
    h = hashlib.sha256()
    for path in sorted(root.rglob("*")):
        if path.is_dir() or path.name in skip:
            continue
        h.update(str(path.relative_to(root)).encode())
        h.update(path.read_bytes())
    return h.hexdigest()


def run_edge_cli(arrays: list[np.ndarray], workdir: Path, binary: str) -> list[np.ndarray]:
    """Feed RGB arrays through `edgescan edge`; returns its outputs in order."""
    in_dir, out_dir = workdir / "edge_in", workdir / "edge_out"
    names = [f"img_{i:02d}.png" for i in range(len(arrays))]
    for name, arr in zip(names, arrays):
        save_rgb(in_dir / name, arr)
    proc = subprocess.run(
        [binary, "edge", "--in", str(in_dir), "--out", str(out_dir)],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0, proc.stderr
    return [np.asarray(Image.open(out_dir / name)) for name in names]


@pytest.fixture(scope="session")
def edgescan_bin() -> str:
    path = shutil.which("edgescan")
    if path is None:
        pytest.fail("scorer CLI `edgescan` must be on PATH for cross-component tests")
    return path


@pytest.fixture(scope="session")
def dataset_root(tmp_path_factory) -> Path:
    root = tmp_path_factory.mktemp("dataset")
    return build_dataset(root)


@pytest.fixture(scope="session")
def textures_dir(tmp_path_factory) -> Path:
    d = tmp_path_factory.mktemp("textures")
    for i in range(2):
        save_rgb(d / f"tex_{i}.png", texture_image(i))
    return d


@pytest.fixture(scope="session")
def pool_dir(dataset_root, textures_dir, tmp_path_factory, edgescan_bin) -> Path:
    # rotate=None keeps the overfit targets identical to the train images;
    # the rotation flag path is exercised in the pool tests
    out = tmp_path_factory.mktemp("pools") / "pool"
    prepare_pool(
        dataset_root,
        "widget",
        textures_dir,
        out,
        pool_size=4,
        seed=3,
        resize=SIZE,
        rotate=None,
    )
    return out


@pytest.fixture(scope="session")
def smoke_config() -> TrainConfig:
    # one logged step per epoch makes "epochs" the step counter; lr well
    # above the full-protocol default so 200 steps suffice to overfit
    return TrainConfig(
        epochs=200,
        steps_per_epoch=1,
        batch=4,
        lr=1e-3,
        lr_drop_epochs=(),
        resize=(SIZE, SIZE),
        seed=0,
    )


@pytest.fixture(scope="session")
def trained(pool_dir, smoke_config, tmp_path_factory) -> tuple[Path, Path]:
    """(checkpoint path, run directory) of the session's one real training run."""
    out = tmp_path_factory.mktemp("trained")
    ckpt = train(pool_dir, smoke_config, out)
    return ckpt, out
