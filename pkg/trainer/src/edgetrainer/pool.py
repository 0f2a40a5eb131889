"""Corruption pools: delegated synthesis plus a loader for the triples.

Pseudo-anomaly logic lives in exactly one place, the scorer package, so
pool preparation shells out to its `synth` subcommand instead of porting
the corruption math. Rotation augmentation rides the same call (--rotate)
and therefore happens before corruption and edge extraction, keeping each
(edge, target, mask) triple self-consistent.

A pool on disk is the layout `synth` writes:

    pool/
      edge/00000.png     single-channel network inputs
      target/00000.png   clean RGB regression targets
      mask/00000.png     changed-pixel masks (unused by the loss, kept
                         for inspection)
      run_config.json    full provenance of the draw
"""

from __future__ import annotations

import subprocess
from pathlib import Path
from typing import Sequence

import numpy as np
import torch
from PIL import Image


class TrainerError(RuntimeError):
    """Pool preparation or consumption failed."""


def _cli_argv(primary_cli: str | Sequence[str]) -> list[str]:
    return [primary_cli] if isinstance(primary_cli, str) else list(primary_cli)


def prepare_pool(
    dataset_root: str | Path,
    category: str,
    textures_dir: str | Path,
    out_dir: str | Path,
    pool_size: int = 8000,
    seed: int = 0,
    resize: int | tuple[int, int] = 256,
    rotate: tuple[float, float] | None = (-45.0, 45.0),
    dataset_kind: str = "mvtec-ad",
    primary_cli: str | Sequence[str] = "edgescan",
    extra_flags: Sequence[str] = (),
) -> Path:
    """Synthesize a training pool through the scorer's CLI; returns out_dir."""
    if pool_size <= 0:
        raise TrainerError(f"pool_size must be positive, got {pool_size}")
    if isinstance(resize, tuple):
        resize_arg = f"{resize[0]}x{resize[1]}"
    else:
        resize_arg = str(resize)
    argv = _cli_argv(primary_cli) + [
        "synth",
        "--dataset", str(dataset_root),
        "--kind", dataset_kind,
        "--category", category,
        "--textures", str(textures_dir),
        "--out", str(out_dir),
        "--count", str(pool_size),
        "--seed", str(seed),
        "--resize", resize_arg,
        *extra_flags,
    ]
    if rotate is not None:
        argv.append(f"--rotate={rotate[0]},{rotate[1]}")
    try:
        proc = subprocess.run(argv, capture_output=True, text=True)
    except FileNotFoundError as e:
        raise TrainerError(f"scorer CLI not found: {argv[0]} ({e})") from e
    if proc.returncode != 0:
        tail = proc.stderr.strip().splitlines()[-5:]
        raise TrainerError(
            f"`{' '.join(argv)}` exited {proc.returncode}:\n" + "\n".join(tail)
        )
    return Path(out_dir)


class PoolDataset:
    """Loads (edge, target) tensor pairs from a pool directory.

    Tensors are float32 in [0, 1]: edge as (1, h, w), target as (3, h, w).
    """

    def __init__(self, pool_dir: str | Path, input_kind: str = "edge"):
        if input_kind not in ("edge", "rgb"):
            raise TrainerError(f"input_kind must be 'edge' or 'rgb', got {input_kind!r}")
        self.pool_dir = Path(pool_dir)
        self.input_kind = input_kind
        edge_dir = self.pool_dir / "edge"
        target_dir = self.pool_dir / "target"
        if not edge_dir.is_dir() or not target_dir.is_dir():
            raise TrainerError(f"not a pool directory (edge/ and target/ missing): {self.pool_dir}")
        self.stems = sorted(p.stem for p in edge_dir.glob("*.png"))
        if not self.stems:
            raise TrainerError(f"pool is empty: {edge_dir}")
        missing = [s for s in self.stems if not (target_dir / f"{s}.png").is_file()]
        if missing:
            raise TrainerError(f"pool targets missing for stems: {missing[:10]}")

    def __len__(self) -> int:
        return len(self.stems)

    def __getitem__(self, index: int) -> tuple[torch.Tensor, torch.Tensor]:
        stem = self.stems[index]
        target = self._load(self.pool_dir / "target" / f"{stem}.png", "RGB")
        if self.input_kind == "edge":
            net_in = self._load(self.pool_dir / "edge" / f"{stem}.png", "L")
        else:
            # rgb ablation: pools keep no corrupted RGB, so this degenerates
            # to plain autoencoding of the clean target
            net_in = target
        return net_in, target

    @staticmethod
    def _load(path: Path, mode: str) -> torch.Tensor:
        try:
            with Image.open(path) as im:
                arr = np.asarray(im.convert(mode), dtype=np.float32) / 255.0
        except OSError as e:
            raise TrainerError(f"unreadable pool image {path}: {e}") from e
        if arr.ndim == 2:
            arr = arr[None, :, :]
        else:
            arr = arr.transpose(2, 0, 1)
        return torch.from_numpy(arr.copy())

    def batch(self, indices: Sequence[int]) -> tuple[torch.Tensor, torch.Tensor]:
        pairs = [self[i] for i in indices]
        return torch.stack([p[0] for p in pairs]), torch.stack([p[1] for p in pairs])
