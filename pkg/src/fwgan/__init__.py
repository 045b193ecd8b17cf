"""Framewise neural vocoder: streaming frame-by-frame waveform generation
from 100 Hz acoustic features, with perceptual filtering, sparsification,
complexity accounting, spectral losses and voicing metrics."""

__version__ = "0.1.0"

from .features import (
    AnalysisConfig,
    FeatureFrame,
    SignalBuffer,
    analyze,
    de_emphasis,
    pre_emphasis,
    read_features,
    read_wav,
    write_features,
    write_wav,
)
from .generator import (
    GeneratorConfig,
    GeneratorState,
    StreamingSynthesizer,
    audit_shapes,
    infer_config,
    random_model,
    synthesize_offline,
    synthesize_streaming,
    synthesize_to_speech,
    zero_model,
)
from .losses import (
    DiscriminatorConfig,
    StftConfig,
    discriminator_bank,
    discriminator_forward,
    lsgan_losses,
    spectral_losses,
    stft_sqrt_mag,
)
from .metrics import pitch_track, pmae, vde
from .perceptual import (
    LpcCoeffs,
    WeightingParams,
    inverse_weighting,
    lpc_from_bfcc,
    weighting_filter,
)
from .report import ComplexityReport, approx_gflops_label
from .sparsity import bench_rtf, count_flops, paper_density_plan, prune
from .tensor_core import (
    BlockSparseMatrix,
    DenseMatrix,
    GruParams,
    activation,
    gemv,
    glu,
    gru_step,
)
from .weights_io import ModelWeights, WeightFormatError, load_model, save_model
