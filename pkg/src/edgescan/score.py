"""Anomaly scoring of reconstructions.

A reconstruction is compared against the original along two channels that
deliberately ignore luminance-only error: a chroma term (squared CIELAB
a/b distance, box filtered) and a structure term (1 minus box-filtered
multi-scale gradient magnitude similarity). The anomaly map is

    A = color_weight * A_color + A_structure

and an image-level score is the maximum over the map. Identical inputs
score exactly zero everywhere.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from edgescan.imgcore import (
    avg_pool2,
    bilinear_upsample,
    box_filter,
    ensure_float_map,
    ensure_rgb,
    rgb_to_lab8,
    to_grayscale,
)

# Prewitt pair on the [0, 255] intensity scale; sign is irrelevant because
# only the magnitude is used.
PREWITT_X = np.array([[1.0, 0.0, -1.0]] * 3, dtype=np.float64) / 3.0
PREWITT_Y = PREWITT_X.T.copy()


@dataclass(frozen=True)
class ScoreConfig:
    """Weights and window sizes of the anomaly-map computation."""

    color_weight: float = 1e-3
    color_kernel: int = 11
    structure_kernel: int = 21
    msgms_levels: int = 4
    gms_c: float = 170.0

    def validate(self) -> None:
        if self.color_weight < 0.0:
            raise ValueError(f"color_weight must be >= 0, got {self.color_weight}")
        for name in ("color_kernel", "structure_kernel"):
            k = getattr(self, name)
            if not isinstance(k, (int, np.integer)) or k < 1 or k % 2 == 0:
                raise ValueError(f"{name} must be an odd int >= 1, got {k}")
        if not isinstance(self.msgms_levels, (int, np.integer)) or self.msgms_levels < 1:
            raise ValueError(f"msgms_levels must be an int >= 1, got {self.msgms_levels}")
        if self.gms_c <= 0.0:
            raise ValueError(f"gms_c must be > 0, got {self.gms_c}")


DEFAULT_SCORE_CONFIG = ScoreConfig()


def _as_intensity(img: np.ndarray) -> np.ndarray:
    """Accept a uint8 grayscale image or a float map on the [0, 255] scale."""
    if isinstance(img, np.ndarray) and img.dtype == np.uint8 and img.ndim == 2:
        return img.astype(np.float64)
    return ensure_float_map(img)


def gradient_magnitude(img: np.ndarray) -> np.ndarray:
    """Prewitt gradient magnitude with mirrored borders."""
    m = _as_intensity(img)
    gx = ndimage.correlate(m, PREWITT_X, mode="mirror")
    gy = ndimage.correlate(m, PREWITT_Y, mode="mirror")
    return np.sqrt(gx * gx + gy * gy)


def gms(a: np.ndarray, b: np.ndarray, c: float = 170.0) -> np.ndarray:
    """Gradient magnitude similarity map, 1.0 where gradients agree.

    The stabilizer c sits on the [0, 255] intensity scale. Bitwise-equal
    inputs produce exactly 1.0 everywhere because numerator and denominator
    evaluate to the same float.
    """
    ma = _as_intensity(a)
    mb = _as_intensity(b)
    if ma.shape != mb.shape:
        raise ValueError(f"shape mismatch: {ma.shape} vs {mb.shape}")
    if c <= 0.0:
        raise ValueError(f"c must be > 0, got {c}")
    ga = gradient_magnitude(ma)
    gb = gradient_magnitude(mb)
    return (2.0 * ga * gb + c) / (ga * ga + gb * gb + c)


def msgms(a: np.ndarray, b: np.ndarray, levels: int = 4, c: float = 170.0) -> np.ndarray:
    """Multi-scale GMS: equal-weight mean over a 2x-downsampled pyramid.

    Level 0 is full resolution; each further level halves via 2x2 average
    pooling (in float, no re-quantization). Coarse GMS maps are bilinearly
    upsampled back to full resolution before averaging. The smallest level
    must keep both dimensions at least 2.
    """
    ma = _as_intensity(a)
    mb = _as_intensity(b)
    if ma.shape != mb.shape:
        raise ValueError(f"shape mismatch: {ma.shape} vs {mb.shape}")
    if not isinstance(levels, (int, np.integer)) or levels < 1:
        raise ValueError(f"levels must be an int >= 1, got {levels}")
    h, w = ma.shape
    if min(h, w) // 2 ** (levels - 1) < 2:
        raise ValueError(f"{levels} levels is too deep for a {h}x{w} image")
    total = np.zeros((h, w), dtype=np.float64)
    pa, pb = ma, mb
    for level in range(levels):
        if level > 0:
            pa = avg_pool2(pa)
            pb = avg_pool2(pb)
        sim = gms(pa, pb, c)
        if sim.shape != (h, w):
            sim = bilinear_upsample(sim, h, w)
        total += sim
    return total / levels


def structure_anomaly(a: np.ndarray, b: np.ndarray, config: ScoreConfig = DEFAULT_SCORE_CONFIG) -> np.ndarray:
    """Structural anomaly map: 1 - box_filter(msgms(a, b), structure_kernel)."""
    config.validate()
    sim = msgms(a, b, levels=config.msgms_levels, c=config.gms_c)
    return 1.0 - box_filter(sim, config.structure_kernel)


def color_anomaly(a: np.ndarray, b: np.ndarray, config: ScoreConfig = DEFAULT_SCORE_CONFIG) -> np.ndarray:
    """Chroma anomaly map: box-filtered squared distance in 8-bit Lab a/b.

    Luminance is excluded on purpose: reconstruction brightness drift must
    not register as a color defect.
    """
    ensure_rgb(a)
    ensure_rgb(b)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    config.validate()
    la = rgb_to_lab8(a).astype(np.float64)
    lb = rgb_to_lab8(b).astype(np.float64)
    da = la[..., 1] - lb[..., 1]
    db = la[..., 2] - lb[..., 2]
    return box_filter(da * da + db * db, config.color_kernel)


def anomaly_map(original: np.ndarray, recon: np.ndarray, config: ScoreConfig = DEFAULT_SCORE_CONFIG) -> np.ndarray:
    """Full anomaly map of a reconstruction against the original image.

    ``color_weight * color_anomaly + structure_anomaly``, computed on the
    grayscale images for structure and on 8-bit Lab chroma for color.
    """
    ensure_rgb(original)
    ensure_rgb(recon)
    if original.shape != recon.shape:
        raise ValueError(f"shape mismatch: {original.shape} vs {recon.shape}")
    config.validate()
    structure = structure_anomaly(to_grayscale(original), to_grayscale(recon), config)
    color = color_anomaly(original, recon, config)
    return config.color_weight * color + structure


def image_score(m: np.ndarray) -> float:
    """Image-level anomaly score: the maximum of the anomaly map."""
    return float(ensure_float_map(m).max())


def ssim_index(a: np.ndarray, b: np.ndarray, window: int = 11, sigma: float = 1.5) -> tuple[float, np.ndarray]:
    """Gaussian-windowed SSIM on the [0, 255] intensity scale.

    Returns the mean over the valid (fully-windowed) region together with
    the valid-region similarity map, so border padding never dilutes the
    index. Both dimensions must be at least the window size.
    """
    ma = _as_intensity(a)
    mb = _as_intensity(b)
    if ma.shape != mb.shape:
        raise ValueError(f"shape mismatch: {ma.shape} vs {mb.shape}")
    if window % 2 == 0 or window < 3:
        raise ValueError(f"window must be an odd int >= 3, got {window}")
    if min(ma.shape) < window:
        raise ValueError(f"image {ma.shape} smaller than window {window}")
    r = window // 2
    ax = np.arange(-r, r + 1, dtype=np.float64)
    g1 = np.exp(-(ax * ax) / (2.0 * sigma * sigma))
    kernel = np.outer(g1, g1)
    kernel /= kernel.sum()

    def win_mean(m: np.ndarray) -> np.ndarray:
        return ndimage.correlate(m, kernel, mode="constant")[r:-r, r:-r]

    c1 = (0.01 * 255.0) ** 2
    c2 = (0.03 * 255.0) ** 2
    mu_a = win_mean(ma)
    mu_b = win_mean(mb)
    var_a = win_mean(ma * ma) - mu_a * mu_a
    var_b = win_mean(mb * mb) - mu_b * mu_b
    cov = win_mean(ma * mb) - mu_a * mu_b
    sim = ((2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2)) / (
        (mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2)
    )
    return float(sim.mean()), sim


def l2_map(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Pixelwise squared error between two RGB images on the [0, 1] scale,
    averaged over channels."""
    ensure_rgb(a)
    ensure_rgb(b)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    diff = (a.astype(np.float64) - b.astype(np.float64)) / 255.0
    return np.mean(diff * diff, axis=-1)
