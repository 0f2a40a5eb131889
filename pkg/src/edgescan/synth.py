"""Pseudo-anomaly synthesis for building training pools from defect-free images.

Two corruption routes, each behind an independent Bernoulli gate: texture
blending inside a Perlin-noise mask, and large-rectangle cut-paste within
the image itself. A corrupted image plus its exact corruption mask is what
the reconstruction network trains against; the clean original is the target.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from PIL import Image

from edgescan.edge import edge_pipeline
from edgescan.imgcore import ensure_binary_mask, ensure_rgb, quantize_u8


class CutpasteFitError(RuntimeError):
    """No cut-paste rectangle fit the image within the retry budget."""


@dataclass(frozen=True)
class CorruptionConfig:
    """Parameters of the synthetic corruption process."""

    p_texture: float = 0.5
    p_cutpaste: float = 0.3
    beta_range: tuple[float, float] = (0.1, 1.0)
    perlin_scale_exponents: tuple[int, ...] = (0, 1, 2, 3, 4, 5)
    perlin_threshold: float = 0.5
    cutpaste_area_range: tuple[float, float] = (0.05, 0.30)
    cutpaste_aspect_range: tuple[float, float] = (0.3, 3.3)
    cutpaste_max_retries: int = 16

    def validate(self) -> None:
        for name in ("p_texture", "p_cutpaste"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {p}")
        lo, hi = self.beta_range
        if not (0.0 <= lo <= hi <= 1.0):
            raise ValueError(f"beta_range must satisfy 0 <= lo <= hi <= 1, got {self.beta_range}")
        if not self.perlin_scale_exponents:
            raise ValueError("perlin_scale_exponents must be non-empty")
        if any((not isinstance(e, (int, np.integer))) or e < 0 for e in self.perlin_scale_exponents):
            raise ValueError(f"perlin_scale_exponents must be ints >= 0, got {self.perlin_scale_exponents}")
        if not 0.0 < self.perlin_threshold < 1.0:
            raise ValueError(f"perlin_threshold must be in (0, 1), got {self.perlin_threshold}")
        lo, hi = self.cutpaste_area_range
        if not (0.0 < lo <= hi <= 1.0):
            raise ValueError(f"cutpaste_area_range must satisfy 0 < lo <= hi <= 1, got {self.cutpaste_area_range}")
        lo, hi = self.cutpaste_aspect_range
        if not (0.0 < lo <= hi):
            raise ValueError(f"cutpaste_aspect_range must be positive with lo <= hi, got {self.cutpaste_aspect_range}")
        if self.cutpaste_max_retries < 1:
            raise ValueError("cutpaste_max_retries must be >= 1")


@dataclass(frozen=True)
class PerlinField:
    """A sampled gradient-noise field together with how it was generated."""

    map: np.ndarray
    period_x: int
    period_y: int
    seed: int


@dataclass(frozen=True)
class CorruptionOutcome:
    """Result of one corruption draw: image, exact mask, and which gates fired."""

    image: np.ndarray
    mask: np.ndarray
    used_texture: bool
    used_cutpaste: bool


def _fade(t: np.ndarray) -> np.ndarray:
    # quintic smoothstep: 6t^5 - 15t^4 + 10t^3, zero value/derivative at 0 and 1
    return t * t * t * (t * (t * 6.0 - 15.0) + 10.0)


def perlin_noise(h: int, w: int, period_x: int, period_y: int, seed: int) -> PerlinField:
    """Classic gradient-lattice Perlin noise sampled on an h x w pixel grid.

    The lattice has period_x x period_y cells stretched over the image, with
    unit gradient vectors at seeded random angles on the lattice points.
    Values are scaled by sqrt(2) into [-1, 1] and are exactly zero at pixels
    that land on lattice points.
    """
    for name, v in (("h", h), ("w", w), ("period_x", period_x), ("period_y", period_y)):
        if not isinstance(v, (int, np.integer)) or v < 1:
            raise ValueError(f"{name} must be an int >= 1, got {v!r}")
    rng = np.random.default_rng(seed)
    angles = rng.uniform(0.0, 2.0 * np.pi, size=(period_y + 1, period_x + 1))
    grad = np.stack([np.cos(angles), np.sin(angles)], axis=-1)

    ys = (np.arange(h) * period_y) / h
    xs = (np.arange(w) * period_x) / w
    y0 = np.floor(ys).astype(np.intp)
    x0 = np.floor(xs).astype(np.intp)
    fy = (ys - y0)[:, None]
    fx = (xs - x0)[None, :]

    g00 = grad[y0[:, None], x0[None, :]]
    g10 = grad[y0[:, None], x0[None, :] + 1]
    g01 = grad[y0[:, None] + 1, x0[None, :]]
    g11 = grad[y0[:, None] + 1, x0[None, :] + 1]

    n00 = g00[..., 0] * fx + g00[..., 1] * fy
    n10 = g10[..., 0] * (fx - 1.0) + g10[..., 1] * fy
    n01 = g01[..., 0] * fx + g01[..., 1] * (fy - 1.0)
    n11 = g11[..., 0] * (fx - 1.0) + g11[..., 1] * (fy - 1.0)

    u = _fade(fx)
    v = _fade(fy)
    nx0 = n00 * (1.0 - u) + n10 * u
    nx1 = n01 * (1.0 - u) + n11 * u
    value = (nx0 * (1.0 - v) + nx1 * v) * math.sqrt(2.0)
    return PerlinField(map=value, period_x=int(period_x), period_y=int(period_y), seed=int(seed))


def perlin_mask(field: PerlinField | np.ndarray, threshold: float) -> np.ndarray:
    """Binarize a noise field: min-max normalize, then keep values > threshold.

    A constant field has no spread to normalize and yields an empty mask.
    Returns a float64 mask of exact 0s and 1s.
    """
    if not 0.0 < threshold < 1.0:
        raise ValueError(f"threshold must be in (0, 1), got {threshold}")
    m = field.map if isinstance(field, PerlinField) else field
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2:
        raise ValueError(f"expected 2-d field, got shape {m.shape}")
    lo = m.min()
    hi = m.max()
    if hi == lo:
        return np.zeros(m.shape, dtype=np.float64)
    normalized = (m - lo) / (hi - lo)
    return (normalized > threshold).astype(np.float64)


def blend_anomaly(img: np.ndarray, texture: np.ndarray, mask: np.ndarray, beta: float) -> np.ndarray:
    """Blend a texture into the image inside the mask.

    Inside the mask the output is ``(1 - beta) * img + beta * texture``
    re-quantized to uint8; outside it is bit-equal to the input.
    """
    ensure_rgb(img)
    ensure_rgb(texture)
    if texture.shape != img.shape:
        raise ValueError(f"texture shape {texture.shape} != image shape {img.shape}")
    mask = ensure_binary_mask(mask)
    if mask.shape != img.shape[:2]:
        raise ValueError(f"mask shape {mask.shape} != image shape {img.shape[:2]}")
    if not 0.0 <= beta <= 1.0:
        raise ValueError(f"beta must be in [0, 1], got {beta}")
    out = img.copy()
    inside = mask == 1.0
    if inside.any():
        blended = (1.0 - beta) * img[inside].astype(np.float64) + beta * texture[inside].astype(np.float64)
        out[inside] = quantize_u8(blended)
    return out


def cutpaste(img: np.ndarray, config: CorruptionConfig, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Copy a large random rectangle of the image onto a random destination.

    The rectangle's area fraction and height/width aspect ratio are drawn
    uniformly from the config ranges; draws that cannot fit the image are
    resampled up to the retry budget, after which CutpasteFitError is
    raised. Returns the pasted image and the destination-rectangle mask.
    """
    ensure_rgb(img)
    config.validate()
    h, w = img.shape[:2]
    rng = np.random.default_rng(seed)

    rh = rw = 0
    for _ in range(config.cutpaste_max_retries):
        frac = rng.uniform(*config.cutpaste_area_range)
        aspect = rng.uniform(*config.cutpaste_aspect_range)
        area = frac * h * w
        rh = int(round(math.sqrt(area * aspect)))
        rw = int(round(math.sqrt(area / aspect)))
        if 1 <= rh <= h and 1 <= rw <= w:
            break
    else:
        raise CutpasteFitError(
            f"no rectangle from area {config.cutpaste_area_range} x aspect "
            f"{config.cutpaste_aspect_range} fits a {h}x{w} image in "
            f"{config.cutpaste_max_retries} attempts"
        )

    sy = int(rng.integers(0, h - rh + 1))
    sx = int(rng.integers(0, w - rw + 1))
    dy = int(rng.integers(0, h - rh + 1))
    dx = int(rng.integers(0, w - rw + 1))
    out = img.copy()
    out[dy : dy + rh, dx : dx + rw] = img[sy : sy + rh, sx : sx + rw]
    mask = np.zeros((h, w), dtype=np.float64)
    mask[dy : dy + rh, dx : dx + rw] = 1.0
    return out, mask


class TextureBank:
    """An ordered collection of RGB texture images used for blending.

    Banks are ordered by file name so that a (bank, seed) pair is fully
    deterministic. A bank may be empty; drawing from an empty bank fails.
    """

    _EXTS = (".png", ".jpg", ".jpeg", ".bmp", ".tif", ".tiff")

    def __init__(self, images: list[np.ndarray], names: list[str] | None = None):
        for im in images:
            ensure_rgb(im)
        self.images = list(images)
        self.names = list(names) if names is not None else [str(i) for i in range(len(images))]
        if len(self.names) != len(self.images):
            raise ValueError("names and images must align")
        self._resized_cache: dict[tuple[int, int, int], np.ndarray] = {}

    @classmethod
    def from_dir(cls, path) -> "TextureBank":
        """Load every image file in a flat directory, sorted by file name."""
        from pathlib import Path

        root = Path(path)
        if not root.is_dir():
            raise ValueError(f"texture directory not found: {root}")
        files = sorted(p for p in root.iterdir() if p.suffix.lower() in cls._EXTS and p.is_file())
        images = []
        for p in files:
            with Image.open(p) as im:
                images.append(np.asarray(im.convert("RGB"), dtype=np.uint8))
        return cls(images, [p.name for p in files])

    def __len__(self) -> int:
        return len(self.images)

    def image_resized(self, index: int, hw: tuple[int, int]) -> np.ndarray:
        """Texture at the given index, bilinearly resized to (h, w)."""
        h, w = hw
        key = (index, h, w)
        cached = self._resized_cache.get(key)
        if cached is not None:
            return cached
        img = self.images[index]
        if img.shape[:2] != (h, w):
            pil = Image.fromarray(img).resize((w, h), Image.Resampling.BILINEAR)
            img = np.asarray(pil, dtype=np.uint8)
        self._resized_cache[key] = img
        return img


def rotate_rgb(img: np.ndarray, degrees: float) -> np.ndarray:
    """Rotate about the image center with bilinear resampling, same canvas.

    Corners that rotate out of view are filled with black. Used as a
    training-time augmentation applied before corruption.
    """
    ensure_rgb(img)
    pil = Image.fromarray(img).rotate(degrees, resample=Image.Resampling.BILINEAR, expand=False)
    return np.asarray(pil, dtype=np.uint8)


def corrupt(
    img: np.ndarray,
    bank: TextureBank | None,
    config: CorruptionConfig = CorruptionConfig(),
    seed: int = 0,
) -> CorruptionOutcome:
    """Draw one corruption of a clean image.

    Texture blending and cut-paste fire independently with p_texture and
    p_cutpaste; cut-paste is applied after (on top of) the texture blend.
    The returned mask is the union of the per-route masks, and pixels that
    differ from the input are always inside it. With both gates off the
    image is returned bit-equal (mask empty).
    """
    ensure_rgb(img)
    config.validate()
    h, w = img.shape[:2]
    rng = np.random.default_rng(seed)
    use_texture = bool(rng.random() < config.p_texture)
    use_cutpaste = bool(rng.random() < config.p_cutpaste)

    out = img
    mask = np.zeros((h, w), dtype=np.float64)
    if use_texture:
        if bank is None or len(bank) == 0:
            raise ValueError("texture corruption drawn but the texture bank is empty")
        t_index = int(rng.integers(0, len(bank)))
        texture = bank.image_resized(t_index, (h, w))
        exponents = np.asarray(config.perlin_scale_exponents)
        period_x = 2 ** int(rng.choice(exponents))
        period_y = 2 ** int(rng.choice(exponents))
        field = perlin_noise(h, w, period_x, period_y, seed=int(rng.integers(0, 2**63)))
        pmask = perlin_mask(field, config.perlin_threshold)
        beta = float(rng.uniform(*config.beta_range))
        out = blend_anomaly(out, texture, pmask, beta)
        mask = np.maximum(mask, pmask)
    if use_cutpaste:
        out, cmask = cutpaste(out, config, seed=int(rng.integers(0, 2**63)))
        mask = np.maximum(mask, cmask)
    if out is img:
        out = img.copy()
    return CorruptionOutcome(image=out, mask=mask, used_texture=use_texture, used_cutpaste=use_cutpaste)


def training_pair(
    img: np.ndarray,
    bank: TextureBank | None,
    config: CorruptionConfig = CorruptionConfig(),
    seed: int = 0,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """One training triple: edge map of the corrupted image, clean target, mask.

    The network input is the grayscale morphological edge map of the
    corrupted image; the regression target is the clean original. When both
    corruption gates stay off, the edge input equals the edge map of the
    clean image, which is exactly the inference-time preprocessing.
    """
    outcome = corrupt(img, bank, config, seed)
    return edge_pipeline(outcome.image), img.copy(), outcome.mask
