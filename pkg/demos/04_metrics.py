"""Evaluation metrics: image ranking, pixel ranking, and region overlap.

Three views of the same question, because each hides a different failure:

* image AUROC ranks whole images and ignores localization entirely;
* pixel AUROC and AP pool every pixel, so one huge defect can mask ten
  missed small ones;
* AUPRO averages overlap per connected ground-truth region before
  integrating over false-positive rate (to 0.3, then normalized), so every
  region counts equally regardless of size.

The toy scenario below has one well-detected large defect and one missed
small one. Watch pixel AUROC stay flattering while AUPRO refuses to.
"""

import numpy as np

from edgescan import auroc, aupro, average_precision, connected_components, evaluate_category

rng = np.random.default_rng(17)

# image-level: scores of 4 good and 4 defective boards
scores = np.array([0.02, 0.05, 0.01, 0.04, 0.90, 0.60, 0.75, 0.03])
labels = np.array([0, 0, 0, 0, 1, 1, 1, 1])
print(f"image AUROC = {auroc(scores, labels):.3f}  (one defect scored like a good board)")
print(f"image AP    = {average_precision(scores, labels):.3f}")

# pixel-level: a 64x64 map with two ground-truth regions
mask = np.zeros((64, 64))
mask[8:40, 8:40] = 1.0   # large defect, 1024 px
mask[50:54, 50:54] = 1.0  # small defect, 16 px
labels_map, n = connected_components(mask)
print(f"\nground truth has {n} regions of sizes "
      f"{[int((labels_map == i).sum()) for i in range(1, n + 1)]}")

amap = rng.uniform(0.0, 0.05, size=(64, 64))
amap[8:40, 8:40] += 0.8  # the large region is found
# ...and the small one is not: it keeps background scores

pooled_auroc = auroc(amap.ravel(), mask.ravel())
pro = aupro([amap], [mask])
print(f"pixel AUROC = {pooled_auroc:.3f}   <- dominated by the 1024 px region")
print(f"AUPRO       = {pro:.3f}   <- the missed 16 px region costs half")

# evaluate_category bundles all of the above for a list of test images
maps = [np.full((64, 64), 0.01), amap]
masks = [np.zeros((64, 64)), mask]
result = evaluate_category(
    anomaly_maps=maps,
    image_scores=[m.max() for m in maps],
    gt_masks=masks,
    image_labels=[0, 1],
)
print(f"\nevaluate_category: {result.as_dict()}")
