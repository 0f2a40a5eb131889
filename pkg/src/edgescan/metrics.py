"""Threshold-free detection metrics.

Image-level and pixel-level AUROC, pixel average precision, and the
per-region overlap curve area (PRO) integrated up to a false-positive-rate
limit. Everything is computed from raw scores; no operating point is ever
chosen. Degenerate inputs (a single class, no ground-truth regions) raise
MetricDegenerateError instead of returning a silently meaningless number.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np
from scipy import ndimage
from scipy.stats import rankdata

from edgescan.imgcore import ensure_binary_mask, ensure_float_map


class MetricDegenerateError(ValueError):
    """The metric is undefined on this input (e.g. only one class present)."""


def _scores_labels(scores, labels) -> tuple[np.ndarray, np.ndarray]:
    s = np.asarray(scores, dtype=np.float64).ravel()
    y = np.asarray(labels).ravel()
    if s.size != y.size:
        raise ValueError(f"scores ({s.size}) and labels ({y.size}) differ in length")
    if s.size == 0:
        raise ValueError("empty score set")
    if not np.all(np.isfinite(s)):
        raise ValueError("scores contain non-finite values")
    if not np.all((y == 0) | (y == 1)):
        raise ValueError("labels must be 0 or 1")
    return s, y.astype(np.int64)


def auroc(scores, labels) -> float:
    """Area under the ROC curve via the rank statistic; ties count half.

    Equivalent to the probability that a random positive outscores a random
    negative, with ties worth 0.5. Requires at least one sample per class.
    """
    s, y = _scores_labels(scores, labels)
    n_pos = int(y.sum())
    n_neg = y.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise MetricDegenerateError(
            f"AUROC needs both classes, got {n_pos} positives / {n_neg} negatives"
        )
    ranks = rankdata(s)
    u = ranks[y == 1].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def average_precision(scores, labels) -> float:
    """Average precision over distinct score thresholds, descending.

    AP = sum over thresholds of (recall step) * precision, where each
    distinct score value is one threshold and prediction is score >= t.
    Requires at least one positive.
    """
    s, y = _scores_labels(scores, labels)
    total_pos = int(y.sum())
    if total_pos == 0:
        raise MetricDegenerateError("average precision needs at least one positive")
    order = np.argsort(-s, kind="stable")
    ss = s[order]
    yy = y[order]
    # last index of each run of equal scores = the ">= t" cutoff for that value
    ends = np.nonzero(np.diff(ss))[0]
    ends = np.concatenate([ends, [ss.size - 1]])
    tp = np.cumsum(yy)[ends].astype(np.float64)
    precision = tp / (ends + 1).astype(np.float64)
    recall = tp / total_pos
    prev_recall = np.concatenate([[0.0], recall[:-1]])
    return float(((recall - prev_recall) * precision).sum())


def connected_components(mask: np.ndarray) -> tuple[np.ndarray, int]:
    """8-connected components of a binary mask.

    Labels are 1..count, assigned by each component's first pixel in
    row-major scan order; background stays 0.
    """
    m = ensure_binary_mask(mask)
    labeled, count = ndimage.label(m > 0, structure=np.ones((3, 3), dtype=int))
    if count == 0:
        return np.zeros(m.shape, dtype=np.int32), 0
    # re-label by first occurrence so the ordering is a contract, not an
    # accident of the labeling backend
    flat = labeled.ravel()
    first = np.full(count + 1, flat.size, dtype=np.int64)
    np.minimum.at(first, flat, np.arange(flat.size, dtype=np.int64))
    order = np.argsort(first[1:], kind="stable")
    perm = np.zeros(count + 1, dtype=np.int32)
    perm[order + 1] = np.arange(1, count + 1, dtype=np.int32)
    return perm[labeled], int(count)


def _pro_curve_area(fpr: np.ndarray, pro: np.ndarray, limit: float) -> float:
    """Trapezoidal area of a monotone curve on [0, limit], normalized by limit.

    The curve is extended from (0, 0) and the segment crossing the limit is
    linearly interpolated.
    """
    xs = np.concatenate([[0.0], fpr, [1.0]])
    ys = np.concatenate([[0.0], pro, [1.0]])
    j = int(np.searchsorted(xs, limit, side="left"))
    if j < xs.size and xs[j] == limit:
        x_cut = np.concatenate([xs[: j + 1]])
        y_cut = np.concatenate([ys[: j + 1]])
    else:
        frac = (limit - xs[j - 1]) / (xs[j] - xs[j - 1])
        y_lim = ys[j - 1] + frac * (ys[j] - ys[j - 1])
        x_cut = np.concatenate([xs[:j], [limit]])
        y_cut = np.concatenate([ys[:j], [y_lim]])
    area = float(np.sum((x_cut[1:] - x_cut[:-1]) * (y_cut[1:] + y_cut[:-1])) / 2.0)
    return area / limit


def aupro(
    maps,
    masks,
    fpr_limit: float = 0.3,
    *,
    max_exhaustive: int = 10000,
    n_thresholds: int = 2048,
) -> float:
    """Area under the per-region overlap curve up to an FPR limit.

    For each threshold t (detection is score > t) the curve point is
    (pooled false-positive rate, mean per-region overlap), where regions
    are 8-connected components of the ground-truth masks across all images
    and negatives are pooled non-mask pixels. Thresholds sweep every
    distinct pooled score value when there are at most ``max_exhaustive``
    of them, otherwise ``n_thresholds`` quantile-spaced values. The curve
    area on [0, fpr_limit] is normalized by the limit.
    """
    if not 0.0 < fpr_limit <= 1.0:
        raise ValueError(f"fpr_limit must be in (0, 1], got {fpr_limit}")
    maps = list(maps)
    masks = list(masks)
    if len(maps) != len(masks) or not maps:
        raise ValueError("maps and masks must be non-empty and aligned")

    region_scores: list[np.ndarray] = []
    negatives = []
    pooled = []
    for m, g in zip(maps, masks):
        m = ensure_float_map(m)
        g = ensure_binary_mask(g)
        if m.shape != g.shape:
            raise ValueError(f"map shape {m.shape} != mask shape {g.shape}")
        labeled, count = connected_components(g)
        for k in range(1, count + 1):
            region_scores.append(np.sort(m[labeled == k], kind="stable"))
        negatives.append(m[g == 0.0])
        pooled.append(m.ravel())
    if not region_scores:
        raise MetricDegenerateError("no ground-truth regions in any mask")
    negs = np.sort(np.concatenate(negatives), kind="stable")
    if negs.size == 0:
        raise MetricDegenerateError("no negative pixels to rate false positives on")

    pooled_all = np.concatenate(pooled)
    distinct = np.unique(pooled_all)
    if distinct.size <= max_exhaustive:
        thresholds = distinct[::-1]
    else:
        qs = np.linspace(0.0, 1.0, n_thresholds)
        thresholds = np.unique(np.quantile(pooled_all, qs))[::-1]

    fp = negs.size - np.searchsorted(negs, thresholds, side="right")
    fpr = fp / negs.size
    pro = np.zeros(thresholds.size, dtype=np.float64)
    for r in region_scores:
        detected = r.size - np.searchsorted(r, thresholds, side="right")
        pro += detected / r.size
    pro /= len(region_scores)
    return _pro_curve_area(fpr, pro, fpr_limit)


@dataclass(frozen=True)
class CategoryResult:
    """The four headline metrics for one dataset category."""

    image_auroc: float
    pixel_auroc: float
    pixel_ap: float
    aupro: float

    def as_dict(self) -> dict[str, float]:
        return {
            "image_auroc": self.image_auroc,
            "pixel_auroc": self.pixel_auroc,
            "pixel_ap": self.pixel_ap,
            "aupro": self.aupro,
        }

    @classmethod
    def from_dict(cls, d: dict[str, float]) -> "CategoryResult":
        return cls(
            image_auroc=float(d["image_auroc"]),
            pixel_auroc=float(d["pixel_auroc"]),
            pixel_ap=float(d["pixel_ap"]),
            aupro=float(d["aupro"]),
        )


def evaluate_category(
    anomaly_maps, image_scores, gt_masks, image_labels, *, fpr_limit: float = 0.3
) -> CategoryResult:
    """All four metrics for one category.

    Pixel metrics pool every pixel of every map; AUPRO is computed over the
    subset of images whose ground-truth mask is non-empty. Image labels are
    1 for anomalous.
    """
    maps = [ensure_float_map(m) for m in anomaly_maps]
    masks = [ensure_binary_mask(g) for g in gt_masks]
    scores = np.asarray(image_scores, dtype=np.float64).ravel()
    labels = np.asarray(image_labels).ravel()
    if not (len(maps) == len(masks) == scores.size == labels.size):
        raise ValueError(
            f"misaligned inputs: {len(maps)} maps, {len(masks)} masks, "
            f"{scores.size} scores, {labels.size} labels"
        )
    for m, g in zip(maps, masks):
        if m.shape != g.shape:
            raise ValueError(f"map shape {m.shape} != mask shape {g.shape}")

    img_auroc = auroc(scores, labels)
    pix_scores = np.concatenate([m.ravel() for m in maps])
    pix_labels = np.concatenate([g.ravel() for g in masks]).astype(np.int64)
    pix_auroc = auroc(pix_scores, pix_labels)
    pix_ap = average_precision(pix_scores, pix_labels)
    pairs = [(m, g) for m, g in zip(maps, masks) if g.any()]
    if not pairs:
        raise MetricDegenerateError("no image in the category has a ground-truth region")
    region = aupro([m for m, _ in pairs], [g for _, g in pairs], fpr_limit=fpr_limit)
    return CategoryResult(
        image_auroc=img_auroc,
        pixel_auroc=pix_auroc,
        pixel_ap=pix_ap,
        aupro=region,
    )


@dataclass
class EvalReport:
    """Per-category results plus free-form run metadata."""

    categories: dict[str, CategoryResult]
    metadata: dict[str, Any] = field(default_factory=dict)

    def aggregate(self) -> CategoryResult:
        """Unweighted mean of each metric across categories."""
        if not self.categories:
            raise ValueError("report has no categories")
        rows = list(self.categories.values())
        return CategoryResult(
            image_auroc=float(np.mean([r.image_auroc for r in rows])),
            pixel_auroc=float(np.mean([r.pixel_auroc for r in rows])),
            pixel_ap=float(np.mean([r.pixel_ap for r in rows])),
            aupro=float(np.mean([r.aupro for r in rows])),
        )

    def to_dict(self) -> dict[str, Any]:
        return {
            "categories": {name: r.as_dict() for name, r in sorted(self.categories.items())},
            "aggregate": self.aggregate().as_dict(),
            "metadata": self.metadata,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "EvalReport":
        cats = {name: CategoryResult.from_dict(row) for name, row in d["categories"].items()}
        return cls(categories=cats, metadata=dict(d.get("metadata", {})))
