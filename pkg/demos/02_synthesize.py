"""Pseudo-anomaly synthesis: manufacturing defects without defect data.

Training needs (corrupted, clean) pairs, but real defects are scarce. Two
corruption routes stand in for them:

* texture blending inside a thresholded Perlin-noise mask, which imitates
  contamination with out-of-distribution appearance, and
* cut-paste, which relocates a rectangle of the image itself and imitates
  structural damage.

Each route fires independently per sample, so a pool contains texture-only,
cutpaste-only, both, and untouched examples. The returned mask marks every
changed pixel and becomes the reconstruction target's ground truth.
"""

from pathlib import Path

import numpy as np

from edgescan import CorruptionConfig, TextureBank, corrupt, training_pair
from edgescan.dataset import save_gray_png, save_rgb_png

out = Path(__file__).parent / "output"
out.mkdir(exist_ok=True)

rng = np.random.default_rng(5)

# a clean "product": woven stripes
h = w = 256
yy, xx = np.mgrid[0:h, 0:w]
clean = np.stack(
    [
        150 + 60 * np.sin(xx / 9.0),
        140 + 50 * np.sin(xx / 9.0 + 1.0),
        120 + 30 * np.cos(yy / 13.0),
    ],
    axis=-1,
).astype(np.uint8)

# the texture bank supplies foreign appearance for the blending route
speckle = rng.integers(0, 256, size=(h, w, 3), dtype=np.uint8)
checker = np.where(((xx // 16 + yy // 16) % 2 == 0)[..., None], (220, 60, 40), (30, 30, 30)).astype(np.uint8)
bank = TextureBank([speckle, checker], names=["speckle", "checker"])

config = CorruptionConfig(p_texture=1.0, p_cutpaste=1.0, beta_range=(0.5, 0.9))

outcome = corrupt(clean, bank, config, seed=42)
print(f"texture route fired : {outcome.used_texture}")
print(f"cutpaste route fired: {outcome.used_cutpaste}")
print(f"mask covers         : {outcome.mask.mean():.1%} of the image")

changed = np.any(outcome.image != clean, axis=-1)
assert not np.any(changed & (outcome.mask == 0)), "every changed pixel is inside the mask"

save_rgb_png(clean, out / "clean.png")
save_rgb_png(outcome.image, out / "corrupted.png")
save_gray_png((outcome.mask * 255).astype(np.uint8), out / "mask.png")

# training_pair packages the same draw as (edge-of-corrupted, clean target, mask)
edge, target, mask = training_pair(clean, bank, config, seed=42)
assert np.array_equal(target, clean)
assert np.array_equal(mask, outcome.mask)
save_gray_png(edge, out / "training_input.png")

print(f"wrote clean/corrupted/mask/training_input to {out}")
