"""The whole loop through the command line, start to finish.

Builds a miniature dataset on disk, stands in a perfect reconstructor
(reconstructions are the clean originals), then drives the installed
`edgescan` CLI exactly as a shell user would:

    edgescan run --dataset ... --category widget --recon ... --out ...

`run` is score + eval in one step: it writes per-image anomaly maps (.pfm),
preview heatmaps, scores.csv, and a metrics report, all stamped with a hash
of the effective configuration. Any real reconstructor can replace the
stand-in by writing PNGs into the same <defect>/<stem>.png layout.
"""

import json
import subprocess
import sys
import tempfile
from pathlib import Path

import numpy as np

from edgescan import CorruptionConfig, TextureBank, corrupt
from edgescan.dataset import save_gray_png, save_rgb_png


def plate(seed: int, size: int = 128) -> np.ndarray:
    rng = np.random.default_rng(seed)
    yy, xx = np.mgrid[0:size, 0:size]
    phase = rng.uniform(0, 6.28)
    img = np.stack(
        [
            140 + 60 * np.sin(xx / 8.0 + phase),
            150 + 40 * np.sin(yy / 11.0 + phase),
            120 + 50 * np.cos((xx + yy) / 14.0),
        ],
        axis=-1,
    )
    return np.clip(img + rng.normal(0, 2, img.shape), 0, 255).astype(np.uint8)


base = Path(tempfile.mkdtemp(prefix="edgescan-demo-"))
data, recon, out = base / "data", base / "recon", base / "out"
cat = data / "widget"

for i in range(4):
    save_rgb_png(plate(i), cat / "train" / "good" / f"{i:03d}.png")

for i in range(3):
    img = plate(100 + i)
    save_rgb_png(img, cat / "test" / "good" / f"{i:03d}.png")
    save_rgb_png(img, recon / "good" / f"{i:03d}.png")

bank = TextureBank([np.random.default_rng(1).integers(0, 256, (128, 128, 3), dtype=np.uint8)])
config = CorruptionConfig(p_texture=1.0, p_cutpaste=1.0, beta_range=(0.7, 0.9))
for i in range(3):
    clean = plate(200 + i)
    bad = corrupt(clean, bank, config, seed=i)
    save_rgb_png(bad.image, cat / "test" / "stain" / f"{i:03d}.png")
    save_gray_png((bad.mask * 255).astype(np.uint8), cat / "ground_truth" / "stain" / f"{i:03d}_mask.png")
    save_rgb_png(clean, recon / "stain" / f"{i:03d}.png")  # the perfect reconstruction

cmd = [
    sys.executable, "-m", "edgescan", "run",
    "--dataset", str(data), "--category", "widget",
    "--recon", str(recon), "--out", str(out),
    "--resize", "128", "--seed", "0",
]
print("$", " ".join(cmd[2:]))
subprocess.run(cmd, check=True)

report = json.loads((out / "report.json").read_text())
print("\nreport.json categories:")
print(json.dumps(report["categories"], indent=2))

print("\nartifacts under", out)
for p in sorted(out.rglob("*")):
    if p.is_file():
        print("  ", p.relative_to(out))
