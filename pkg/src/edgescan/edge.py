"""Grayscale morphological edge extraction.

The detector never reconstructs from raw pixels: the network input is the
morphological gradient of the grayscale image, i.e. dilation minus erosion
with a 3x3 window. Flat regions cancel to exactly zero and intensity steps
survive, which is what forces the reconstruction to rely on learned
appearance rather than copying the input.
"""

from __future__ import annotations

import numpy as np

from edgescan.imgcore import dilate3, ensure_rgb, erode3, to_grayscale


def morphological_edge(gray: np.ndarray) -> np.ndarray:
    """Edge map of a grayscale image: dilate3(g) - erode3(g).

    Dilation dominates erosion pointwise, so the difference is always in
    [0, 255] and needs no clamping. Constant images map to all zeros.
    """
    d = dilate3(gray).astype(np.int16)
    e = erode3(gray).astype(np.int16)
    return (d - e).astype(np.uint8)


def edge_pipeline(img: np.ndarray) -> np.ndarray:
    """Full preprocessing for an RGB image: grayscale, then edge map."""
    ensure_rgb(img)
    return morphological_edge(to_grayscale(img))
