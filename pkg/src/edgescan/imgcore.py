"""Core array types and pixel-level primitives.

Images are plain numpy arrays with fixed conventions rather than wrapper
classes: an RGB image is ``(h, w, 3) uint8``, a grayscale image is
``(h, w) uint8``, and a float map is ``(h, w) float64`` with finite values.
The helpers here validate those conventions and implement the shared
primitives every other module builds on: 8-bit quantization, luma and
CIELAB conversion, 3x3 morphology, mean filtering, pooling, and bilinear
upsampling.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage


def ensure_rgb(img: np.ndarray) -> np.ndarray:
    """Validate an ``(h, w, 3) uint8`` image and return it unchanged."""
    if not isinstance(img, np.ndarray):
        raise ValueError(f"expected ndarray, got {type(img).__name__}")
    if img.ndim != 3 or img.shape[2] != 3:
        raise ValueError(f"expected (h, w, 3) RGB image, got shape {img.shape}")
    if img.dtype != np.uint8:
        raise ValueError(f"expected uint8 RGB image, got dtype {img.dtype}")
    if img.shape[0] < 1 or img.shape[1] < 1:
        raise ValueError(f"empty image: shape {img.shape}")
    return img


def ensure_gray(img: np.ndarray) -> np.ndarray:
    """Validate an ``(h, w) uint8`` grayscale image and return it unchanged."""
    if not isinstance(img, np.ndarray):
        raise ValueError(f"expected ndarray, got {type(img).__name__}")
    if img.ndim != 2:
        raise ValueError(f"expected (h, w) grayscale image, got shape {img.shape}")
    if img.dtype != np.uint8:
        raise ValueError(f"expected uint8 grayscale image, got dtype {img.dtype}")
    if img.shape[0] < 1 or img.shape[1] < 1:
        raise ValueError(f"empty image: shape {img.shape}")
    return img


def ensure_float_map(m: np.ndarray) -> np.ndarray:
    """Validate a 2-d float map with finite values; returns it as float64."""
    if not isinstance(m, np.ndarray):
        raise ValueError(f"expected ndarray, got {type(m).__name__}")
    if m.ndim != 2:
        raise ValueError(f"expected 2-d float map, got shape {m.shape}")
    if m.shape[0] < 1 or m.shape[1] < 1:
        raise ValueError(f"empty map: shape {m.shape}")
    m = m.astype(np.float64, copy=False)
    if not np.all(np.isfinite(m)):
        raise ValueError("float map contains non-finite values")
    return m


def ensure_binary_mask(mask: np.ndarray) -> np.ndarray:
    """Validate a 2-d mask whose values are exactly 0 or 1; returns float64."""
    m = ensure_float_map(mask)
    if not np.all((m == 0.0) | (m == 1.0)):
        raise ValueError("mask values must be exactly 0 or 1")
    return m


def quantize_u8(values: np.ndarray) -> np.ndarray:
    """Clamp to [0, 255] and round half away from zero to uint8.

    After clamping every value is non-negative, so half-away-from-zero
    reduces to floor(x + 0.5). numpy's own round() rounds half to even and
    would disagree on exact .5 boundaries.
    """
    v = np.asarray(values, dtype=np.float64)
    return np.floor(np.clip(v, 0.0, 255.0) + 0.5).astype(np.uint8)


def to_grayscale(img: np.ndarray) -> np.ndarray:
    """BT.601 luma: round(0.299 r + 0.587 g + 0.114 b) per pixel."""
    ensure_rgb(img)
    weights = np.array([0.299, 0.587, 0.114], dtype=np.float64)
    return quantize_u8(img.astype(np.float64) @ weights)


@dataclass(frozen=True)
class LabConstants:
    """Constants for the direct RGB-to-CIELAB conversion.

    The conversion intentionally skips sRGB gamma linearization: the 3x3
    matrix is applied straight to rgb/255. The white point equals the row
    sums of the matrix, which is what makes achromatic pixels land exactly
    on a = b = 0 before quantization.
    """

    rgb_to_xyz: tuple[tuple[float, float, float], ...] = (
        (0.412453, 0.357580, 0.180423),
        (0.212671, 0.715160, 0.072169),
        (0.019334, 0.119193, 0.950227),
    )
    white_point: tuple[float, float, float] = (0.950456, 1.0, 1.088754)
    # f(t) switches from cube root to the linear ramp at (6/29)^3
    f_threshold: float = (6.0 / 29.0) ** 3
    f_slope: float = 841.0 / 108.0
    f_offset: float = 4.0 / 29.0

    def matrix(self) -> np.ndarray:
        return np.array(self.rgb_to_xyz, dtype=np.float64)

    def white(self) -> np.ndarray:
        return np.array(self.white_point, dtype=np.float64)


LAB_DEFAULT = LabConstants()


def rgb_to_lab8(img: np.ndarray, constants: LabConstants = LAB_DEFAULT) -> np.ndarray:
    """Convert an RGB image to 8-bit-encoded CIELAB.

    Returns an ``(h, w, 3) uint8`` array with channels
    ``L8 = round(L * 255 / 100)``, ``a8 = round(a + 128)``,
    ``b8 = round(b + 128)``, all rounded half away from zero after
    clamping to [0, 255].
    """
    ensure_rgb(img)
    rgb = img.astype(np.float64) / 255.0
    xyz = rgb @ constants.matrix().T
    t = xyz / constants.white()
    f = np.where(
        t > constants.f_threshold,
        np.cbrt(t),
        constants.f_slope * t + constants.f_offset,
    )
    lum = 116.0 * f[..., 1] - 16.0
    a = 500.0 * (f[..., 0] - f[..., 1])
    b = 200.0 * (f[..., 1] - f[..., 2])
    encoded = np.stack([lum * (255.0 / 100.0), a + 128.0, b + 128.0], axis=-1)
    return quantize_u8(encoded)


def dilate3(img: np.ndarray) -> np.ndarray:
    """3x3 maximum filter with replicated borders."""
    ensure_gray(img)
    return ndimage.maximum_filter(img, size=3, mode="nearest")


def erode3(img: np.ndarray) -> np.ndarray:
    """3x3 minimum filter with replicated borders."""
    ensure_gray(img)
    return ndimage.minimum_filter(img, size=3, mode="nearest")


def box_filter(m: np.ndarray, k: int) -> np.ndarray:
    """k x k mean filter with mirrored borders (edge pixel not repeated).

    k must be odd, at least 1, and no larger than either map dimension.
    k = 1 returns the input unchanged (as float64).
    """
    m = ensure_float_map(m)
    if not isinstance(k, (int, np.integer)):
        raise ValueError(f"kernel size must be an int, got {type(k).__name__}")
    if k < 1 or k % 2 == 0:
        raise ValueError(f"kernel size must be odd and >= 1, got {k}")
    if k > min(m.shape):
        raise ValueError(f"kernel size {k} exceeds map dimensions {m.shape}")
    if k == 1:
        return m.copy()
    return ndimage.uniform_filter(m, size=k, mode="mirror")


def avg_pool2(m: np.ndarray) -> np.ndarray:
    """2x2 average pooling with stride 2; an odd trailing row/column is dropped.

    Grayscale uint8 input is pooled in float and re-quantized to uint8;
    float maps stay float64. Both dimensions must be at least 2.
    """
    if not isinstance(m, np.ndarray) or m.ndim != 2:
        raise ValueError("expected a 2-d array")
    h, w = m.shape
    if h < 2 or w < 2:
        raise ValueError(f"both dimensions must be >= 2 to pool, got {m.shape}")
    trimmed = m[: h - h % 2, : w - w % 2].astype(np.float64)
    pooled = trimmed.reshape(h // 2, 2, w // 2, 2).mean(axis=(1, 3))
    if m.dtype == np.uint8:
        return quantize_u8(pooled)
    return pooled


def bilinear_upsample(m: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Bilinear resize of a float map using half-pixel centers.

    Output pixel (y, x) samples the source at
    ``((y + 0.5) * h / out_h - 0.5, (x + 0.5) * w / out_w - 0.5)`` with
    coordinates clamped to the valid range. Target dimensions must not be
    smaller than the source.
    """
    m = ensure_float_map(m)
    h, w = m.shape
    if out_h < h or out_w < w:
        raise ValueError(
            f"target ({out_h}, {out_w}) smaller than source ({h}, {w})"
        )
    sy = np.clip((np.arange(out_h) + 0.5) * h / out_h - 0.5, 0.0, h - 1.0)
    sx = np.clip((np.arange(out_w) + 0.5) * w / out_w - 0.5, 0.0, w - 1.0)
    y0 = np.floor(sy).astype(np.intp)
    x0 = np.floor(sx).astype(np.intp)
    y1 = np.minimum(y0 + 1, h - 1)
    x1 = np.minimum(x0 + 1, w - 1)
    fy = (sy - y0)[:, None]
    fx = (sx - x0)[None, :]
    top = m[np.ix_(y0, x0)] * (1 - fx) + m[np.ix_(y0, x1)] * fx
    bot = m[np.ix_(y1, x0)] * (1 - fx) + m[np.ix_(y1, x1)] * fx
    return top * (1 - fy) + bot * fy
