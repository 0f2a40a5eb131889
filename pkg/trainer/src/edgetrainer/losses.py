"""Reconstruction loss: pixel l2 plus a weighted SSIM complaint.

total = l2(pred, target) + lambda * (1 - mean SSIM(pred, target))

Both terms are computed on [0, 1] tensors. SSIM uses the conventional
11-tap Gaussian window (sigma 1.5) applied depthwise per channel with no
padding, so only fully-covered windows vote, and the standard stabilizers
C1 = 0.01^2, C2 = 0.03^2 for unit data range. The total is formed as the
literal sum of the two returned terms, which is what lets downstream logs
assert the decomposition exactly.
"""

from __future__ import annotations

import torch
import torch.nn.functional as F

_WINDOW_SIZE = 11
_SIGMA = 1.5
_C1 = 0.01**2
_C2 = 0.03**2


def _gaussian_window(device: torch.device, dtype: torch.dtype) -> torch.Tensor:
    half = (_WINDOW_SIZE - 1) / 2.0
    coords = torch.arange(_WINDOW_SIZE, device=device, dtype=dtype) - half
    g = torch.exp(-(coords**2) / (2.0 * _SIGMA**2))
    g = g / g.sum()
    return torch.outer(g, g)


def ssim_mean(pred: torch.Tensor, target: torch.Tensor) -> torch.Tensor:
    """Mean SSIM over all valid windows, channels, and batch entries."""
    if pred.shape != target.shape or pred.ndim != 4:
        raise ValueError(f"expected matching nchw tensors, got {tuple(pred.shape)} vs {tuple(target.shape)}")
    if pred.shape[-2] < _WINDOW_SIZE or pred.shape[-1] < _WINDOW_SIZE:
        raise ValueError(f"inputs must be at least {_WINDOW_SIZE} px per side")
    channels = pred.shape[1]
    window = _gaussian_window(pred.device, pred.dtype).expand(channels, 1, -1, -1)

    mu_p = F.conv2d(pred, window, groups=channels)
    mu_t = F.conv2d(target, window, groups=channels)
    mu_pp = mu_p * mu_p
    mu_tt = mu_t * mu_t
    mu_pt = mu_p * mu_t
    var_p = F.conv2d(pred * pred, window, groups=channels) - mu_pp
    var_t = F.conv2d(target * target, window, groups=channels) - mu_tt
    cov = F.conv2d(pred * target, window, groups=channels) - mu_pt

    ssim_map = ((2.0 * mu_pt + _C1) * (2.0 * cov + _C2)) / (
        (mu_pp + mu_tt + _C1) * (var_p + var_t + _C2)
    )
    return ssim_map.mean()


def reconstruction_loss(
    pred: torch.Tensor, target: torch.Tensor, lam: float = 1.0
) -> tuple[torch.Tensor, torch.Tensor, torch.Tensor]:
    """(total, l2_term, ssim_term) with total = l2_term + lam * ssim_term."""
    l2_term = F.mse_loss(pred, target)
    ssim_term = 1.0 - ssim_mean(pred, target)
    return l2_term + lam * ssim_term, l2_term, ssim_term
