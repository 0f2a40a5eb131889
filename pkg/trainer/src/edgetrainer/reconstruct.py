"""Test-set reconstruction over the scorer's wire protocol.

Walks the dataset's test split directly (the tree layout is a published
interface, not private to the scorer), runs each image through resize ->
grayscale -> morphological edge -> network, and writes 8-bit RGB to
`<out>/<defect>/<stem>.png`. Completeness is the contract: one output per
test image, no exceptions, or the run fails. The scorer's `score` command
consumes the result as-is.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
import torch
from PIL import Image

from edgetrainer.pool import TrainerError
from edgetrainer.preprocess import edge_map
from edgetrainer.train import load_checkpoint

_LAYOUT_SUBDIR = {"mvtec-ad": (), "mvtec-3d-rgb": ("rgb",)}
_IMG_EXTS = {".png", ".jpg", ".jpeg", ".bmp", ".tif", ".tiff"}


def scan_test_images(dataset_root: str | Path, category: str, dataset_kind: str = "mvtec-ad"):
    """(defect_kind, stem, path) for every test image, sorted."""
    if dataset_kind not in _LAYOUT_SUBDIR:
        raise ValueError(f"unknown dataset kind {dataset_kind!r}")
    test_dir = Path(dataset_root) / category / "test"
    if not test_dir.is_dir():
        raise TrainerError(f"no test split at {test_dir}")
    records = []
    for defect_dir in sorted(p for p in test_dir.iterdir() if p.is_dir()):
        image_dir = defect_dir.joinpath(*_LAYOUT_SUBDIR[dataset_kind])
        files = sorted(
            p for p in image_dir.glob("*") if p.is_file() and p.suffix.lower() in _IMG_EXTS
        )
        for f in files:
            records.append((defect_dir.name, f.stem, f))
    if not records:
        raise TrainerError(f"no test images under {test_dir}")
    return records


def reconstruct(
    checkpoint_path: str | Path,
    dataset_root: str | Path,
    category: str,
    out_dir: str | Path,
    dataset_kind: str = "mvtec-ad",
    device: str | None = None,
) -> int:
    """Write one reconstruction per test image; returns how many."""
    device = device or ("cuda" if torch.cuda.is_available() else "cpu")
    model, config, _ = load_checkpoint(checkpoint_path, map_location=device)
    model.to(device).eval()
    w, h = config.resize

    records = scan_test_images(dataset_root, category, dataset_kind)
    out_dir = Path(out_dir)
    written = 0
    with torch.no_grad():
        for defect_kind, stem, path in records:
            try:
                with Image.open(path) as im:
                    img = np.asarray(
                        im.convert("RGB").resize((w, h), Image.Resampling.BILINEAR)
                    )
            except OSError as e:
                raise TrainerError(f"unreadable test image {path}: {e}") from e

            if config.input_kind == "edge":
                net_in = edge_map(img)[None, None, :, :].astype(np.float32) / 255.0
            else:
                net_in = img.transpose(2, 0, 1)[None].astype(np.float32) / 255.0
            pred = model(torch.from_numpy(net_in).to(device))[0]
            rgb = (
                (pred.clamp(0.0, 1.0) * 255.0)
                .round()
                .to(torch.uint8)
                .cpu()
                .numpy()
                .transpose(1, 2, 0)
            )

            target = out_dir / defect_kind / f"{stem}.png"
            target.parent.mkdir(parents=True, exist_ok=True)
            Image.fromarray(rgb, mode="RGB").save(target)
            written += 1
    return written
