"""Edge extraction: what the reconstructor actually sees.

The scoring pipeline never feeds RGB to a model. Images are collapsed to
grayscale and reduced to a morphological gradient (dilation minus erosion
with a 3x3 window), which keeps contours and discards appearance. Run this
and compare input.png with edge.png in demos/output/.
"""

from pathlib import Path

import numpy as np

from edgescan import edge_pipeline, morphological_edge, to_grayscale
from edgescan.dataset import save_gray_png, save_rgb_png

out = Path(__file__).parent / "output"
out.mkdir(exist_ok=True)

# a plate with a bright disc, a dark bar, and a soft diagonal ramp
h = w = 192
yy, xx = np.mgrid[0:h, 0:w]
img = np.full((h, w, 3), 170, dtype=np.uint8)
disc = (yy - 60) ** 2 + (xx - 70) ** 2 < 35**2
img[disc] = (250, 210, 60)
img[130:150, 30:160] = (40, 40, 90)
ramp = np.clip((xx + yy) / 3, 0, 255).astype(np.uint8)
img[..., 2] = np.maximum(img[..., 2], ramp)

save_rgb_png(img, out / "input.png")

gray = to_grayscale(img)
edge = morphological_edge(gray)
save_gray_png(edge, out / "edge.png")

# edge_pipeline is the one-call version of the two steps above
assert np.array_equal(edge, edge_pipeline(img))

print(f"input  : {out / 'input.png'}")
print(f"edges  : {out / 'edge.png'}")
print(f"edge pixels > 0: {(edge > 0).mean():.1%} of the image")
print("hard boundaries (disc, bar) survive; the smooth ramp almost vanishes")
