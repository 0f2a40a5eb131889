"""Inference-time preprocessing, kept bit-compatible with the scorer's CLI.

The scorer owns the canonical edge extraction; the trainer cannot import it
(the two packages talk only over the command line and files), so the same
two steps are reimplemented here with plain numpy and pinned by parity
tests against `edgescan edge` output:

* BT.601 luma, rounded half away from zero, and
* 3x3 morphological gradient (dilation minus erosion) with replicated
  borders.

Any drift here silently degrades reconstructions, which is why the parity
fixtures compare byte-for-byte rather than approximately.
"""

from __future__ import annotations

import numpy as np

_LUMA = np.array([0.299, 0.587, 0.114], dtype=np.float64)


def to_grayscale(img: np.ndarray) -> np.ndarray:
    """BT.601 luma of an RGB uint8 image, rounded half away from zero."""
    if img.ndim != 3 or img.shape[-1] != 3 or img.dtype != np.uint8:
        raise ValueError(f"expected uint8 rgb image, got {img.dtype} {img.shape}")
    luma = img.astype(np.float64) @ _LUMA
    return np.floor(np.clip(luma, 0.0, 255.0) + 0.5).astype(np.uint8)


def _neighborhood(gray: np.ndarray) -> np.ndarray:
    # 9 shifted views over a replicate-padded copy; axis 0 holds the window
    padded = np.pad(gray, 1, mode="edge")
    h, w = gray.shape
    return np.stack([padded[dy : dy + h, dx : dx + w] for dy in range(3) for dx in range(3)])


def morphological_edge(gray: np.ndarray) -> np.ndarray:
    """3x3 dilation minus 3x3 erosion; borders replicate the edge pixel."""
    if gray.ndim != 2 or gray.dtype != np.uint8:
        raise ValueError(f"expected uint8 grayscale image, got {gray.dtype} {gray.shape}")
    stack = _neighborhood(gray)
    # dilation >= erosion pointwise, so the difference stays in uint8 range
    return (stack.max(axis=0) - stack.min(axis=0)).astype(np.uint8)


def edge_map(img: np.ndarray) -> np.ndarray:
    """RGB image to the single-channel edge input the network trains on."""
    return morphological_edge(to_grayscale(img))
