"""Denoising UNet: single-channel edges in, bounded RGB out.

Four encoder stages double the width from 64 to 512 while halving the
resolution; four decoder stages mirror them, each fed by exactly one skip
connection from its encoder twin. A sigmoid head keeps outputs in [0, 1],
the 8-bit-normalized range the loss and the PNG writer expect. Spatial
dims are preserved, which requires both sides divisible by 16.

The published figure of the architecture is graphical only; widths, the
double-conv blocks, and batch norm are recorded in every checkpoint so a
result can always be traced to a concrete network.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import torch
from torch import nn


@dataclass(frozen=True)
class UNetSpec:
    """Architecture knobs stored alongside checkpoints."""

    in_channels: int = 1  # 1 = edge input; 3 = plain-image ablation
    out_channels: int = 3
    stages: int = 4
    base_width: int = 64

    def widths(self) -> list[int]:
        return [self.base_width * 2**i for i in range(self.stages)]

    def as_dict(self) -> dict:
        return asdict(self)

    def validate(self) -> None:
        if self.in_channels not in (1, 3):
            raise ValueError(f"in_channels must be 1 (edge) or 3 (rgb), got {self.in_channels}")
        if self.out_channels != 3:
            raise ValueError(f"out_channels must be 3, got {self.out_channels}")
        if self.stages < 1 or self.base_width < 1:
            raise ValueError("stages and base_width must be positive")


class DoubleConv(nn.Sequential):
    """Two 3x3 conv + batch norm + ReLU blocks at a fixed width."""

    def __init__(self, cin: int, cout: int):
        super().__init__(
            nn.Conv2d(cin, cout, 3, padding=1, bias=False),
            nn.BatchNorm2d(cout),
            nn.ReLU(inplace=True),
            nn.Conv2d(cout, cout, 3, padding=1, bias=False),
            nn.BatchNorm2d(cout),
            nn.ReLU(inplace=True),
        )


class UNet(nn.Module):
    def __init__(self, spec: UNetSpec = UNetSpec()):
        spec.validate()
        super().__init__()
        self.spec = spec
        w = spec.widths()

        self.encoders = nn.ModuleList(
            DoubleConv(spec.in_channels if i == 0 else w[i - 1], w[i]) for i in range(spec.stages)
        )
        self.pool = nn.MaxPool2d(2)
        self.bottom = DoubleConv(w[-1], w[-1])
        self.upsample = nn.Upsample(scale_factor=2, mode="bilinear", align_corners=False)
        # decoder stage i consumes the upsampled deeper features plus the
        # skip from encoder stage i, and emits that encoder's width
        self.decoders = nn.ModuleList(
            DoubleConv((w[i + 1] if i + 1 < spec.stages else w[-1]) + w[i], w[i])
            for i in reversed(range(spec.stages))
        )
        self.head = nn.Conv2d(w[0], spec.out_channels, kernel_size=1)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        factor = 2**self.spec.stages
        if x.shape[-2] % factor or x.shape[-1] % factor:
            raise ValueError(f"spatial dims must be divisible by {factor}, got {tuple(x.shape[-2:])}")
        skips = []
        for encode in self.encoders:
            x = encode(x)
            skips.append(x)
            x = self.pool(x)
        x = self.bottom(x)
        for decode, skip in zip(self.decoders, reversed(skips)):
            x = decode(torch.cat([self.upsample(x), skip], dim=1))
        return torch.sigmoid(self.head(x))


def build_model(spec_dict: dict | None = None) -> UNet:
    """Model from a checkpoint's stored spec dict (or the default spec)."""
    return UNet(UNetSpec(**spec_dict) if spec_dict else UNetSpec())
