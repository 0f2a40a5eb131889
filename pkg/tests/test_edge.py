"""Morphological edge extraction."""

from __future__ import annotations

import numpy as np
import pytest

from edgescan.edge import edge_pipeline, morphological_edge
from edgescan.imgcore import to_grayscale

import oracles as O


def test_constant_image_has_zero_edges():
    img = np.full((16, 16), 143, dtype=np.uint8)
    assert np.all(morphological_edge(img) == 0)


def test_single_bright_pixel_spreads_to_3x3():
    img = np.zeros((7, 7), dtype=np.uint8)
    img[3, 3] = 200
    e = morphological_edge(img)
    want = np.zeros((7, 7), dtype=np.uint8)
    want[2:5, 2:5] = 200
    assert np.array_equal(e, want)


def test_vertical_step_marks_both_sides():
    img = np.zeros((8, 8), dtype=np.uint8)
    img[:, 4:] = 200
    e = morphological_edge(img)
    assert np.all(e[:, 3] == 200)
    assert np.all(e[:, 4] == 200)
    assert np.all(e[:, :3] == 0)
    assert np.all(e[:, 5:] == 0)


def test_matches_reference_on_random_images():
    rng = np.random.default_rng(10)
    for _ in range(5):
        img = rng.integers(0, 256, size=(9, 12), dtype=np.uint8)
        want = (O.dilate3_ref(img).astype(np.int16) - O.erode3_ref(img).astype(np.int16)).astype(np.uint8)
        assert np.array_equal(morphological_edge(img), want)


def test_output_dtype_and_no_wraparound():
    rng = np.random.default_rng(11)
    img = rng.integers(0, 256, size=(16, 16), dtype=np.uint8)
    e = morphological_edge(img)
    assert e.dtype == np.uint8
    # dilation >= erosion pointwise, so the uint8 difference cannot wrap
    assert np.all(e.astype(int) == dilate_minus_erode_int(img))


def dilate_minus_erode_int(img):
    return O.dilate3_ref(img).astype(int) - O.erode3_ref(img).astype(int)


def test_pipeline_is_grayscale_then_edge():
    rng = np.random.default_rng(12)
    img = rng.integers(0, 256, size=(10, 10, 3), dtype=np.uint8)
    assert np.array_equal(edge_pipeline(img), morphological_edge(to_grayscale(img)))


def test_pipeline_rejects_grayscale_input():
    with pytest.raises(ValueError):
        edge_pipeline(np.zeros((8, 8), dtype=np.uint8))
