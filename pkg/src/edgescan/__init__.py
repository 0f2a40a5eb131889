"""Edge-conditioned reconstruction scoring for industrial surface inspection.

The library covers the full inference-side loop: grayscale morphological
edge extraction, pseudo-anomaly synthesis for training pools, perceptual
anomaly scoring of reconstructions, dataset ingestion, and threshold-free
evaluation metrics. Training itself lives in a separate package that talks
to this one through the command line and the on-disk formats.
"""

from edgescan.imgcore import (
    LabConstants,
    avg_pool2,
    bilinear_upsample,
    box_filter,
    dilate3,
    erode3,
    quantize_u8,
    rgb_to_lab8,
    to_grayscale,
)
from edgescan.edge import edge_pipeline, morphological_edge
from edgescan.synth import (
    CorruptionConfig,
    CorruptionOutcome,
    CutpasteFitError,
    PerlinField,
    TextureBank,
    blend_anomaly,
    corrupt,
    cutpaste,
    perlin_mask,
    perlin_noise,
    rotate_rgb,
    training_pair,
)
from edgescan.score import (
    ScoreConfig,
    anomaly_map,
    color_anomaly,
    gms,
    gradient_magnitude,
    image_score,
    l2_map,
    msgms,
    ssim_index,
    structure_anomaly,
)
from edgescan.metrics import (
    CategoryResult,
    EvalReport,
    MetricDegenerateError,
    aupro,
    auroc,
    average_precision,
    connected_components,
    evaluate_category,
)
from edgescan.dataset import (
    DatasetError,
    DatasetIndex,
    ProtocolError,
    RunConfig,
    SampleRecord,
    load_image,
    load_mask,
    match_reconstructions,
    read_float_map,
    read_report,
    scan_dataset,
    write_float_map,
    write_heatmap,
    write_report,
)

__version__ = "0.1.0"
