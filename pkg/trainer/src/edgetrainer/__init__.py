"""Trainer for the edge-conditioned reconstruction scorer.

Fits a UNet denoising autoencoder that maps morphological edge maps back
to clean RGB, using corruption pools synthesized by the scorer's CLI, and
emits test-set reconstructions in the directory layout the scorer
consumes. The two packages share no code, only the command line and the
on-disk formats.
"""

from edgetrainer.losses import reconstruction_loss, ssim_mean
from edgetrainer.model import UNet, UNetSpec, build_model
from edgetrainer.pool import PoolDataset, TrainerError, prepare_pool
from edgetrainer.preprocess import edge_map, morphological_edge, to_grayscale
from edgetrainer.reconstruct import reconstruct, scan_test_images
from edgetrainer.train import (
    TrainConfig,
    TrainingDivergedError,
    TrainState,
    default_train_config,
    export_metrics,
    load_checkpoint,
    save_checkpoint,
    train,
)

__version__ = "0.1.0"
