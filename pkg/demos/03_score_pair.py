"""Scoring one reconstruction: where the anomaly map comes from.

The map is a weighted sum of two complaints about the pair:

* structure: 1 - box_filter(MSGMS), multi-scale gradient-magnitude
  similarity, which lights up where contours disagree, and
* color: box-filtered squared distance in 8-bit Lab (a, b), which lights up
  where chroma disagrees and deliberately ignores lightness.

A perfect reconstruction scores exactly zero, so anything nonzero is signal.
"""

from pathlib import Path

import numpy as np

from edgescan import (
    CorruptionConfig,
    TextureBank,
    anomaly_map,
    color_anomaly,
    corrupt,
    image_score,
    structure_anomaly,
    to_grayscale,
)
from edgescan.dataset import save_rgb_png, write_heatmap

out = Path(__file__).parent / "output"
out.mkdir(exist_ok=True)

rng = np.random.default_rng(3)
h = w = 256
yy, xx = np.mgrid[0:h, 0:w]
clean = np.stack(
    [
        130 + 70 * np.sin((xx + yy) / 11.0),
        150 + 50 * np.sin((xx + yy) / 11.0 + 0.7),
        110 + 40 * np.cos(xx / 17.0),
    ],
    axis=-1,
).astype(np.uint8)

# identity first: the floor really is zero
m0 = anomaly_map(clean, clean)
print(f"identity pair : image_score={image_score(m0)} (max |pixel| = {np.abs(m0).max()})")

# a corrupted "test image" scored against its clean original, which is what
# a perfect reconstructor would return
bank = TextureBank([rng.integers(0, 256, size=(h, w, 3), dtype=np.uint8)])
config = CorruptionConfig(p_texture=1.0, p_cutpaste=1.0, beta_range=(0.7, 0.9))
outcome = corrupt(clean, bank, config, seed=9)

m = anomaly_map(outcome.image, clean)
inside = m[outcome.mask > 0].mean()
outside = m[outcome.mask == 0].mean()
print(f"corrupted pair: image_score={image_score(m):.4f}")
print(f"mean score inside mask  : {inside:.4f}")
print(f"mean score outside mask : {outside:.4f} ({inside / max(outside, 1e-12):.0f}x lower)")

structure = structure_anomaly(to_grayscale(outcome.image), to_grayscale(clean))
color = color_anomaly(outcome.image, clean)
print(f"structure term peak {structure.max():.4f}, color term peak {color.max():.1f} "
      f"(weighted by 1e-3 before fusion)")

save_rgb_png(outcome.image, out / "test_image.png")
write_heatmap(m, out / "anomaly_heatmap.png")
print(f"wrote test_image.png and anomaly_heatmap.png to {out}")
