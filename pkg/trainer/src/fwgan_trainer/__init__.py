"""Toy-scale trainer for the fwgan framewise vocoder.

Talks to the inference engine exclusively through its CLI and file formats
(WAV, raw float32 features, FWGN weight files).
"""

from .data import Dataset, build_dataset, synthetic_speech, to_perceptual
from .export import export
from .losses import (
    DiscriminatorBank,
    gradcheck_l_aux,
    l_aux,
    lsgan_d_loss,
    lsgan_g_loss,
    spectral_losses,
)
from .model import Generator, ToyConfig
from .train import TrainConfig, TrainResult, adversarial_train, pretrain

__version__ = "0.1.0"
