"""Independent reference implementations used to pin the library.

Everything in this module is written to be obviously correct rather than
fast: scalar math, explicit loops, brute-force pair counting, flood fill.
None of it imports the package under test. Tests compare the production
code against these references on small inputs and on frozen golden values.
"""

from __future__ import annotations

import math
from collections import deque

import numpy as np

# ---------------------------------------------------------------------------
# scalar quantization and color


def round_half_away(x: float) -> int:
    """Round to nearest integer, halves away from zero."""
    if x >= 0.0:
        return int(math.floor(x + 0.5))
    return int(math.ceil(x - 0.5))


def quantize_u8_ref(x: float) -> int:
    v = min(max(x, 0.0), 255.0)
    return round_half_away(v)


def grayscale_ref(r: int, g: int, b: int) -> int:
    return quantize_u8_ref(0.299 * r + 0.587 * g + 0.114 * b)


# RGB -> XYZ rows; the white point is the row sums, so equal r=g=b maps to
# t_x = t_y = t_z and the a/b opponent channels vanish.
_RGB2XYZ = (
    (0.412453, 0.357580, 0.180423),
    (0.212671, 0.715160, 0.072169),
    (0.019334, 0.119193, 0.950227),
)
_WHITE = tuple(sum(row) for row in _RGB2XYZ)


def _lab_f(t: float) -> float:
    if t > (6.0 / 29.0) ** 3:
        return t ** (1.0 / 3.0)
    return (841.0 / 108.0) * t + 4.0 / 29.0


def lab8_ref(r: int, g: int, b: int) -> tuple[int, int, int]:
    """8-bit CIELAB encoding of one sRGB-byte pixel, no gamma linearization."""
    rgb = (r / 255.0, g / 255.0, b / 255.0)
    xyz = [sum(m * c for m, c in zip(row, rgb)) for row in _RGB2XYZ]
    fx, fy, fz = (_lab_f(v / w) for v, w in zip(xyz, _WHITE))
    lum = 116.0 * fy - 16.0
    a = 500.0 * (fx - fy)
    b_ = 200.0 * (fy - fz)
    return (
        quantize_u8_ref(lum * 255.0 / 100.0),
        quantize_u8_ref(a + 128.0),
        quantize_u8_ref(b_ + 128.0),
    )


# Frozen golden values (computed once from lab8_ref and checked against it
# forever after, so a regression in the reference itself is also caught).
LAB8_GOLDEN = {
    (255, 0, 0): (136, 208, 195),
    (0, 255, 0): (224, 42, 211),
    (0, 0, 255): (82, 207, 20),
    (255, 255, 255): (255, 128, 128),
    (0, 0, 0): (0, 128, 128),
    (60, 60, 60): (142, 128, 128),
}

# Squared chroma distance between the red and green golden pixels, the value
# a constant red-vs-green image pair must produce at every color-map pixel.
RED_GREEN_CHROMA_SQ = float((208 - 42) ** 2 + (195 - 211) ** 2)  # 27812.0


# ---------------------------------------------------------------------------
# border indexing and small-kernel filters


def mirror_index(i: int, n: int) -> int:
    """Reflect about the edge pixels without repeating them (period 2n-2)."""
    if n == 1:
        return 0
    period = 2 * n - 2
    i %= period
    if i < 0:
        i += period
    return i if i < n else period - i


def replicate_index(i: int, n: int) -> int:
    return min(max(i, 0), n - 1)


def box_filter_ref(m: np.ndarray, k: int) -> np.ndarray:
    """Mean filter with mirrored borders, explicit loops."""
    h, w = m.shape
    r = k // 2
    out = np.zeros((h, w), dtype=np.float64)
    for y in range(h):
        for x in range(w):
            acc = 0.0
            for dy in range(-r, r + 1):
                for dx in range(-r, r + 1):
                    acc += m[mirror_index(y + dy, h), mirror_index(x + dx, w)]
            out[y, x] = acc / (k * k)
    return out


def correlate_mirror_ref(m: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    """Cross-correlation with mirrored borders, explicit loops."""
    h, w = m.shape
    kh, kw = kernel.shape
    ry, rx = kh // 2, kw // 2
    out = np.zeros((h, w), dtype=np.float64)
    for y in range(h):
        for x in range(w):
            acc = 0.0
            for dy in range(kh):
                for dx in range(kw):
                    yy = mirror_index(y + dy - ry, h)
                    xx = mirror_index(x + dx - rx, w)
                    acc += kernel[dy, dx] * m[yy, xx]
            out[y, x] = acc
    return out


def dilate3_ref(img: np.ndarray) -> np.ndarray:
    h, w = img.shape
    out = np.zeros_like(img)
    for y in range(h):
        for x in range(w):
            best = 0
            for dy in (-1, 0, 1):
                for dx in (-1, 0, 1):
                    v = img[replicate_index(y + dy, h), replicate_index(x + dx, w)]
                    if v > best:
                        best = v
            out[y, x] = best
    return out


def erode3_ref(img: np.ndarray) -> np.ndarray:
    h, w = img.shape
    out = np.zeros_like(img)
    for y in range(h):
        for x in range(w):
            best = 255
            for dy in (-1, 0, 1):
                for dx in (-1, 0, 1):
                    v = img[replicate_index(y + dy, h), replicate_index(x + dx, w)]
                    if v < best:
                        best = v
            out[y, x] = best
    return out


def bilinear_upsample_ref(m: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Half-pixel-center bilinear resize, explicit per-pixel math."""
    h, w = m.shape
    out = np.zeros((out_h, out_w), dtype=np.float64)
    for y in range(out_h):
        sy = (y + 0.5) * h / out_h - 0.5
        sy = min(max(sy, 0.0), h - 1.0)
        y0 = int(math.floor(sy))
        y1 = min(y0 + 1, h - 1)
        fy = sy - y0
        for x in range(out_w):
            sx = (x + 0.5) * w / out_w - 0.5
            sx = min(max(sx, 0.0), w - 1.0)
            x0 = int(math.floor(sx))
            x1 = min(x0 + 1, w - 1)
            fx = sx - x0
            top = m[y0, x0] * (1 - fx) + m[y0, x1] * fx
            bot = m[y1, x0] * (1 - fx) + m[y1, x1] * fx
            out[y, x] = top * (1 - fy) + bot * fy
    return out


def avg_pool2_ref(m: np.ndarray) -> np.ndarray:
    h, w = m.shape
    oh, ow = h // 2, w // 2
    out = np.zeros((oh, ow), dtype=np.float64)
    for y in range(oh):
        for x in range(ow):
            block = m[2 * y : 2 * y + 2, 2 * x : 2 * x + 2]
            out[y, x] = float(np.mean(block.astype(np.float64)))
    return out


def gaussian_window_ref(size: int, sigma: float) -> np.ndarray:
    r = size // 2
    g = np.array(
        [
            [math.exp(-((y * y + x * x) / (2.0 * sigma * sigma))) for x in range(-r, r + 1)]
            for y in range(-r, r + 1)
        ],
        dtype=np.float64,
    )
    return g / g.sum()


def ssim_ref(a: np.ndarray, b: np.ndarray, size: int = 11, sigma: float = 1.5) -> tuple[float, np.ndarray]:
    """Windowed SSIM over the valid region via explicit window extraction."""
    win = gaussian_window_ref(size, sigma)
    c1 = (0.01 * 255.0) ** 2
    c2 = (0.03 * 255.0) ** 2
    a = a.astype(np.float64)
    b = b.astype(np.float64)
    h, w = a.shape
    oh, ow = h - size + 1, w - size + 1
    out = np.zeros((oh, ow), dtype=np.float64)
    for y in range(oh):
        for x in range(ow):
            pa = a[y : y + size, x : x + size]
            pb = b[y : y + size, x : x + size]
            mu_a = float((win * pa).sum())
            mu_b = float((win * pb).sum())
            var_a = float((win * pa * pa).sum()) - mu_a * mu_a
            var_b = float((win * pb * pb).sum()) - mu_b * mu_b
            cov = float((win * pa * pb).sum()) - mu_a * mu_b
            out[y, x] = ((2 * mu_a * mu_b + c1) * (2 * cov + c2)) / (
                (mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2)
            )
    return float(out.mean()), out


# ---------------------------------------------------------------------------
# ranking metrics


def auroc_ref(scores, labels) -> float:
    """Brute-force pair counting; ties between classes count half."""
    pos = [s for s, y in zip(scores, labels) if y == 1]
    neg = [s for s, y in zip(scores, labels) if y == 0]
    if not pos or not neg:
        raise ValueError("need both classes")
    wins = 0.0
    for p in pos:
        for n in neg:
            if p > n:
                wins += 1.0
            elif p == n:
                wins += 0.5
    return wins / (len(pos) * len(neg))


def average_precision_ref(scores, labels) -> float:
    """Loop over distinct thresholds in descending order."""
    total_pos = sum(labels)
    if total_pos == 0:
        raise ValueError("need at least one positive")
    ap = 0.0
    prev_recall = 0.0
    for t in sorted(set(scores), reverse=True):
        tp = sum(1 for s, y in zip(scores, labels) if s >= t and y == 1)
        pp = sum(1 for s in scores if s >= t)
        precision = tp / pp
        recall = tp / total_pos
        ap += (recall - prev_recall) * precision
        prev_recall = recall
    return ap


def connected_components_ref(mask: np.ndarray) -> tuple[np.ndarray, int]:
    """8-connected flood fill, labels ordered by first pixel in scan order."""
    h, w = mask.shape
    labels = np.zeros((h, w), dtype=np.int32)
    count = 0
    for y in range(h):
        for x in range(w):
            if mask[y, x] > 0 and labels[y, x] == 0:
                count += 1
                q = deque([(y, x)])
                labels[y, x] = count
                while q:
                    cy, cx = q.popleft()
                    for dy in (-1, 0, 1):
                        for dx in (-1, 0, 1):
                            ny, nx = cy + dy, cx + dx
                            if 0 <= ny < h and 0 <= nx < w:
                                if mask[ny, nx] > 0 and labels[ny, nx] == 0:
                                    labels[ny, nx] = count
                                    q.append((ny, nx))
    return labels, count


def _curve_area_ref(points: list[tuple[float, float]], limit: float) -> float:
    """Trapezoidal area under a piecewise-linear curve on [0, limit],
    interpolating the last segment that crosses the limit, normalized by it."""
    area = 0.0
    for (x0, y0), (x1, y1) in zip(points, points[1:]):
        if x1 <= limit:
            area += (x1 - x0) * (y0 + y1) / 2.0
        else:
            if x0 >= limit:
                break
            frac = (limit - x0) / (x1 - x0)
            y_lim = y0 + frac * (y1 - y0)
            area += (limit - x0) * (y0 + y_lim) / 2.0
            break
    return area / limit


def aupro_ref(maps, masks, fpr_limit: float = 0.3) -> float:
    """Exhaustive threshold sweep over every distinct pooled score."""
    regions = []  # (map, boolean region) pairs
    neg_scores = []
    for m, g in zip(maps, masks):
        labels, count = connected_components_ref(g)
        for k in range(1, count + 1):
            regions.append((m, labels == k))
        neg_scores.append(m[g == 0])
    if not regions:
        raise ValueError("no ground-truth regions")
    negs = np.concatenate([n.ravel() for n in neg_scores])
    if negs.size == 0:
        raise ValueError("no negative pixels")
    pooled = np.concatenate([m.ravel() for m in maps])
    points = [(0.0, 0.0)]
    for t in sorted(set(pooled.tolist()), reverse=True):
        fpr = float((negs > t).sum()) / negs.size
        pro = float(np.mean([(m[reg] > t).mean() for m, reg in regions]))
        points.append((fpr, pro))
    points.append((1.0, 1.0))
    return _curve_area_ref(points, fpr_limit)


# ---------------------------------------------------------------------------
# frozen binary golden values

# 2x2 float map [[0, 1], [2, 3]] serialized as a little-endian "Pf" stream,
# rows written bottom-up.
PFM_GOLDEN_MAP = np.array([[0.0, 1.0], [2.0, 3.0]], dtype=np.float64)
PFM_GOLDEN_BYTES = (
    b"Pf\n2 2\n-1.0\n"
    b"\x00\x00\x00\x40\x00\x00\x40\x40"  # bottom row: 2.0, 3.0
    b"\x00\x00\x00\x00\x00\x00\x80\x3f"  # top row: 0.0, 1.0
)

# 1x2 map [0, 1] upsampled to 1x4 with half-pixel centers.
BILINEAR_GOLDEN_IN = np.array([[0.0, 1.0]])
BILINEAR_GOLDEN_OUT = np.array([[0.0, 0.25, 0.75, 1.0]])
