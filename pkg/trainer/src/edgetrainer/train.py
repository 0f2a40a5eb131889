"""Training loop, checkpointing, and loss-history export.

One epoch is `steps_per_epoch` optimizer steps over batches sampled with
replacement from the pool; the sampling generator is seeded from the run
seed alone, so which samples are seen never depends on loader machinery.
The learning rate drops by `lr_factor` at the configured epochs (640 and
720 of 800 by default). Every epoch appends one (total, l2, ssim) row to
the history; a non-finite loss aborts immediately, dumping the state so
the run remains inspectable.
"""

from __future__ import annotations

import json
import math
import pickle
import zipfile
from dataclasses import asdict, dataclass, field
from pathlib import Path

import torch

from edgetrainer.losses import reconstruction_loss
from edgetrainer.model import UNet, UNetSpec
from edgetrainer.pool import PoolDataset, TrainerError


class TrainingDivergedError(TrainerError):
    """Loss went non-finite; the state dump path is in the message."""


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 800
    batch: int = 8
    lr: float = 1e-4
    lr_drop_epochs: tuple[int, ...] = (640, 720)
    lr_factor: float = 0.2
    weight_decay: float = 0.0  # 1e-3 for the 3d-rgb dataset flavor
    lam: float = 1.0
    rotate: tuple[float, float] | None = (-45.0, 45.0)  # applied by synth
    resize: tuple[int, int] = (256, 256)
    seed: int = 0
    steps_per_epoch: int | None = None  # default: ceil(pool / batch)
    input_kind: str = "edge"

    def validate(self) -> None:
        if self.epochs < 1 or self.batch < 1:
            raise ValueError("epochs and batch must be positive")
        if self.lr <= 0 or not (0 < self.lr_factor <= 1):
            raise ValueError("lr must be positive and lr_factor in (0, 1]")
        if self.lam < 0 or self.weight_decay < 0:
            raise ValueError("lam and weight_decay must be non-negative")
        if self.input_kind not in ("edge", "rgb"):
            raise ValueError(f"input_kind must be 'edge' or 'rgb', got {self.input_kind!r}")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        d = dict(d)
        for key in ("lr_drop_epochs", "resize", "rotate"):
            if d.get(key) is not None:
                d[key] = tuple(d[key])
        return cls(**d)


def default_train_config(dataset_kind: str = "mvtec-ad", **overrides) -> TrainConfig:
    """Defaults per dataset flavor; the 3d-rgb variant adds weight decay."""
    if dataset_kind == "mvtec-3d-rgb":
        overrides.setdefault("weight_decay", 1e-3)
    return TrainConfig(**overrides)


@dataclass
class TrainState:
    """Progress record: one history row per completed epoch."""

    epoch: int = 0
    history: list[dict] = field(default_factory=list)
    checkpoint_path: str | None = None

    def log(self, total: float, l2: float, ssim: float, lr: float) -> None:
        for name, v in (("total", total), ("l2", l2), ("ssim", ssim)):
            if not math.isfinite(v):
                raise ValueError(f"non-finite {name} loss: {v}")
        self.epoch += 1
        self.history.append({"epoch": self.epoch, "total": total, "l2": l2, "ssim": ssim, "lr": lr})

    def as_dict(self) -> dict:
        return {"epoch": self.epoch, "history": self.history, "checkpoint_path": self.checkpoint_path}


def export_metrics(state: TrainState, path: str | Path) -> Path:
    """Loss history as CSV: epoch, total, l2, ssim, lr."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = ["epoch,total,l2,ssim,lr"]
    for row in state.history:
        lines.append(
            f"{row['epoch']},{row['total']:.10g},{row['l2']:.10g},{row['ssim']:.10g},{row['lr']:.10g}"
        )
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def _dump_state(out_dir: Path, state: TrainState, reason: str) -> Path:
    dump = out_dir / "diverged_state.json"
    dump.write_text(
        json.dumps({"reason": reason, "state": state.as_dict()}, indent=2) + "\n",
        encoding="utf-8",
    )
    return dump


def save_checkpoint(path: Path, model: UNet, config: TrainConfig, state: TrainState) -> None:
    torch.save(
        {
            "model_state": model.state_dict(),
            "arch": model.spec.as_dict(),
            "config": config.to_dict(),
            "state": state.as_dict(),
        },
        path,
    )


def load_checkpoint(path: str | Path, map_location: str = "cpu") -> tuple[UNet, TrainConfig, TrainState]:
    try:
        payload = torch.load(path, map_location=map_location, weights_only=False)
    except (OSError, RuntimeError, EOFError, pickle.UnpicklingError, zipfile.BadZipFile) as e:
        # torch.load surfaces corrupt files through any of these depending
        # on how far the header parse got
        raise TrainerError(f"cannot load checkpoint {path}: {e}") from e
    model = UNet(UNetSpec(**payload["arch"]))
    model.load_state_dict(payload["model_state"])
    config = TrainConfig.from_dict(payload["config"])
    raw = payload["state"]
    state = TrainState(epoch=raw["epoch"], history=raw["history"], checkpoint_path=raw["checkpoint_path"])
    return model, config, state


def train(
    pool_dir: str | Path,
    config: TrainConfig,
    out_dir: str | Path,
    device: str | None = None,
    log_every: int = 0,
) -> Path:
    """Train on a pool; returns the checkpoint path ('checkpoint.pt' in out_dir)."""
    config.validate()
    device = device or ("cuda" if torch.cuda.is_available() else "cpu")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    pool = PoolDataset(pool_dir, input_kind=config.input_kind)
    steps = config.steps_per_epoch or max(1, math.ceil(len(pool) / config.batch))

    torch.manual_seed(config.seed)
    spec = UNetSpec(in_channels=1 if config.input_kind == "edge" else 3)
    model = UNet(spec).to(device)
    optimizer = torch.optim.Adam(model.parameters(), lr=config.lr, weight_decay=config.weight_decay)
    scheduler = torch.optim.lr_scheduler.MultiStepLR(
        optimizer, milestones=list(config.lr_drop_epochs), gamma=config.lr_factor
    )
    sampler = torch.Generator().manual_seed(config.seed)

    state = TrainState()
    checkpoint_path = out_dir / "checkpoint.pt"
    (out_dir / "train_config.json").write_text(
        json.dumps({"config": config.to_dict(), "arch": spec.as_dict()}, indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )

    model.train()
    for epoch in range(config.epochs):
        sums = {"total": 0.0, "l2": 0.0, "ssim": 0.0}
        for _ in range(steps):
            indices = torch.randint(0, len(pool), (config.batch,), generator=sampler).tolist()
            net_in, target = pool.batch(indices)
            net_in, target = net_in.to(device), target.to(device)

            optimizer.zero_grad(set_to_none=True)
            total, l2_term, ssim_term = reconstruction_loss(model(net_in), target, config.lam)
            if not torch.isfinite(total):
                dump = _dump_state(out_dir, state, f"non-finite loss at epoch {epoch + 1}")
                raise TrainingDivergedError(
                    f"loss diverged at epoch {epoch + 1}; state dumped to {dump}"
                )
            total.backward()
            optimizer.step()

            sums["total"] += float(total.detach())
            sums["l2"] += float(l2_term.detach())
            sums["ssim"] += float(ssim_term.detach())

        lr_now = optimizer.param_groups[0]["lr"]
        state.log(sums["total"] / steps, sums["l2"] / steps, sums["ssim"] / steps, lr_now)
        scheduler.step()
        if log_every and (epoch + 1) % log_every == 0:
            row = state.history[-1]
            print(f"epoch {row['epoch']}/{config.epochs} total={row['total']:.4f} "
                  f"l2={row['l2']:.4f} ssim={row['ssim']:.4f} lr={row['lr']:.2g}")

    state.checkpoint_path = str(checkpoint_path)
    save_checkpoint(checkpoint_path, model, config, state)
    export_metrics(state, out_dir / "loss_history.csv")
    return checkpoint_path
