"""Shared fixtures: deterministic pattern images, textures, and dataset trees."""

from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest

from edgescan.dataset import save_gray_png, save_rgb_png


def pattern_image(seed: int, h: int = 64, w: int = 64) -> np.ndarray:
    """A structured 'normal' sample: oriented grating plus a color drift.

    Strong gradients at a 7-20 px period so similarity metrics have real
    structure to compare, plus per-image variation so no two seeds match.
    """
    rng = np.random.default_rng(seed)
    yy, xx = np.mgrid[0:h, 0:w].astype(np.float64)
    theta = rng.uniform(0.0, np.pi)
    freq = rng.uniform(0.05, 0.15)
    phase = rng.uniform(0.0, 2.0 * np.pi)
    wave = np.sin((np.cos(theta) * xx + np.sin(theta) * yy) * 2.0 * np.pi * freq + phase)
    base = np.array([90.0, 110.0, 140.0]) + rng.uniform(-20.0, 20.0, size=3)
    amp = np.array([40.0, 35.0, 30.0])
    img = base[None, None, :] + wave[..., None] * amp[None, None, :]
    img += (xx / w * 30.0)[..., None] * np.array([1.0, 0.5, -0.5])[None, None, :]
    img += rng.normal(0.0, 2.0, size=img.shape)
    return np.clip(img, 0, 255).astype(np.uint8)


def texture_image(kind: str, h: int = 64, w: int = 64) -> np.ndarray:
    """Strongly chromatic textures, far from pattern_image in a/b chroma."""
    yy, xx = np.mgrid[0:h, 0:w]
    img = np.zeros((h, w, 3), dtype=np.uint8)
    if kind == "stripes":
        on = ((xx + yy) // 6) % 2 == 0
        img[on] = (220, 40, 30)
        img[~on] = (240, 200, 40)
    elif kind == "checker":
        on = ((xx // 8) + (yy // 8)) % 2 == 0
        img[on] = (40, 200, 70)
        img[~on] = (200, 40, 190)
    elif kind == "spots":
        rng = np.random.default_rng(99)
        field = rng.random((h // 8 + 1, w // 8 + 1))
        big = np.kron(field, np.ones((8, 8)))[:h, :w]
        on = big > 0.5
        img[on] = (30, 80, 230)
        img[~on] = (250, 140, 20)
    else:
        raise ValueError(f"unknown texture kind {kind}")
    return img


def write_textures(dir_path: Path, kinds=("stripes", "checker", "spots"), size: int = 64) -> Path:
    dir_path.mkdir(parents=True, exist_ok=True)
    for kind in kinds:
        save_rgb_png(texture_image(kind, size, size), dir_path / f"{kind}.png")
    return dir_path


def build_mvtec_tree(
    root: Path,
    category: str = "widget",
    kind: str = "mvtec-ad",
    n_train: int = 4,
    n_test_good: int = 2,
    n_test_defect: int = 2,
    defect_name: str = "scratch",
    size: int = 64,
) -> dict:
    """Write a minimal dataset tree; returns the arrays used, keyed by path role.

    Defect test images get a pasted square and a matching ground-truth mask.
    """
    rgb_sub = ("rgb",) if kind == "mvtec-3d-rgb" else ()
    cat = root / category
    arrays: dict = {"train": [], "test_good": [], "test_defect": [], "masks": []}

    train_dir = cat.joinpath("train", "good", *rgb_sub)
    for i in range(n_train):
        img = pattern_image(100 + i, size, size)
        save_rgb_png(img, train_dir / f"{i:03d}.png")
        arrays["train"].append(img)

    good_dir = cat.joinpath("test", "good", *rgb_sub)
    for i in range(n_test_good):
        img = pattern_image(200 + i, size, size)
        save_rgb_png(img, good_dir / f"{i:03d}.png")
        arrays["test_good"].append(img)

    defect_dir = cat.joinpath("test", defect_name, *rgb_sub)
    for i in range(n_test_defect):
        img = pattern_image(300 + i, size, size)
        mask = np.zeros((size, size), dtype=np.float64)
        y = 8 + 3 * i
        img = img.copy()
        img[y : y + 12, 20 : 20 + 12] = (230, 30, 40)
        mask[y : y + 12, 20 : 20 + 12] = 1.0
        save_rgb_png(img, defect_dir / f"{i:03d}.png")
        if kind == "mvtec-ad":
            mask_path = cat / "ground_truth" / defect_name / f"{i:03d}_mask.png"
        else:
            mask_path = cat / "test" / defect_name / "gt" / f"{i:03d}.png"
        save_gray_png((mask * 255).astype(np.uint8), mask_path)
        arrays["test_defect"].append(img)
        arrays["masks"].append(mask)

    return arrays


@pytest.fixture
def mvtec_tree(tmp_path):
    arrays = build_mvtec_tree(tmp_path / "data")
    return tmp_path / "data", arrays
