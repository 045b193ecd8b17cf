"""Multi-resolution sqrt-STFT losses, spectrogram discriminators, LSGAN.

The reconstruction loss runs over all power-of-two FFT sizes from 64 to
2048 with Hann windows the size of the FFT and 75% overlap. Spectral
convergence uses raw magnitudes; the magnitude l1 term uses sqrt-compressed
magnitudes instead of the usual log. Discriminators are small strided 2-D
convolution stacks over sqrt-magnitude spectrograms with weight-normalized
kernels.
"""

from dataclasses import dataclass, field

import numpy as np

from .tensor_core import leaky_relu

FFT_SIZES = (64, 128, 256, 512, 1024, 2048)


@dataclass(frozen=True)
class StftConfig:
    fft_sizes: tuple = FFT_SIZES

    @property
    def hops(self):
        return tuple(n // 4 for n in self.fft_sizes)


def _frame_signal(x, n_fft):
    """Centered frames with reflect padding, hop = n_fft/4."""
    x = np.asarray(x, dtype=np.float64)
    if len(x) < n_fft:
        raise ValueError(f"signal length {len(x)} < FFT size {n_fft}")
    hop = n_fft // 4
    pad = n_fft // 2
    padded = np.pad(x, pad, mode="reflect")
    n_frames = 1 + (len(padded) - n_fft) // hop
    idx = np.arange(n_fft)[None, :] + hop * np.arange(n_frames)[:, None]
    return padded[idx]


def stft_mag(x, n_fft):
    """Raw magnitude grid (frames, bins) of the Hann-windowed STFT."""
    frames = _frame_signal(x, n_fft) * np.hanning(n_fft)
    return np.abs(np.fft.rfft(frames, axis=1))


def stft_sqrt_mag(x, n_fft):
    """sqrt of the STFT magnitude (the model's spectrogram nonlinearity)."""
    return np.sqrt(stft_mag(x, n_fft))


@dataclass
class ResolutionLoss:
    fft_size: int
    l_sc: float
    l_mag: float


@dataclass
class SpectralLossReport:
    per_resolution: list
    l_aux: float

    def as_text(self):
        lines = [f"{'fft':>5} {'L_sc':>12} {'L_mag':>12}"]
        for r in self.per_resolution:
            lines.append(f"{r.fft_size:>5} {r.l_sc:>12.6f} {r.l_mag:>12.6f}")
        lines.append(f"l_aux={self.l_aux:.6f}")
        return "\n".join(lines)


def spectral_losses(x, x_hat, cfg=None):
    """Per-resolution spectral convergence + sqrt-magnitude l1, and their
    multi-resolution mean L_aux.

    L_sc = ||S(x)| - |S(x_hat)||_F / ||S(x)|_F on raw magnitudes (defined
    as 0 when both signals are all-zero, an error when only the reference
    is); L_mag = mean |sqrt|S(x)| - sqrt|S(x_hat)||.
    """
    cfg = cfg or StftConfig()
    x = np.asarray(x, dtype=np.float64)
    x_hat = np.asarray(x_hat, dtype=np.float64)
    if x.shape != x_hat.shape:
        raise ValueError(f"length mismatch: {x.shape} vs {x_hat.shape}")
    per_res = []
    for n_fft in cfg.fft_sizes:
        s_ref = stft_mag(x, n_fft)
        s_deg = stft_mag(x_hat, n_fft)
        ref_norm = np.linalg.norm(s_ref)
        diff_norm = np.linalg.norm(s_ref - s_deg)
        if ref_norm == 0.0:
            if diff_norm == 0.0:
                l_sc = 0.0
            else:
                raise ValueError("spectral convergence undefined: zero reference")
        else:
            l_sc = float(diff_norm / ref_norm)
        l_mag = float(np.mean(np.abs(np.sqrt(s_ref) - np.sqrt(s_deg))))
        per_res.append(ResolutionLoss(n_fft, l_sc, l_mag))
    l_aux = float(np.mean([r.l_sc + r.l_mag for r in per_res]))
    return SpectralLossReport(per_res, l_aux)


@dataclass(frozen=True)
class DiscriminatorConfig:
    channels: tuple = (32, 32, 32, 32, 1)
    kernel: tuple = (3, 9)  # (time, frequency)
    freq_stride: int = 2
    leaky_slope: float = 0.2


@dataclass
class ConvLayer:
    """Weight-normalized 2-D convolution kernel: w = g * v / ||v||, with the
    norm taken per output channel."""

    v: np.ndarray  # (out_ch, in_ch, k_t, k_f)
    g: np.ndarray  # (out_ch,)

    def kernel(self):
        norms = np.sqrt(np.sum(self.v.astype(np.float64) ** 2, axis=(1, 2, 3)))
        norms = np.maximum(norms, 1e-12)
        return (self.v * (self.g / norms)[:, None, None, None]).astype(np.float64)


def init_discriminator(seed=0, cfg=None):
    """Random discriminator for one resolution: 5 strided conv layers."""
    cfg = cfg or DiscriminatorConfig()
    rng = np.random.default_rng(seed)
    layers = []
    in_ch = 1
    for out_ch in cfg.channels:
        fan_in = in_ch * cfg.kernel[0] * cfg.kernel[1]
        v = rng.normal(0.0, 1.0 / np.sqrt(fan_in), size=(out_ch, in_ch, *cfg.kernel))
        g = np.linalg.norm(v.reshape(out_ch, -1), axis=1)
        layers.append(ConvLayer(v, g))
        in_ch = out_ch
    return layers


def discriminator_bank(seed=0, cfg=None, stft=None):
    """One discriminator per STFT resolution."""
    stft = stft or StftConfig()
    return [init_discriminator(seed + i, cfg) for i in range(len(stft.fft_sizes))]


def conv2d(x, w, stride=(1, 1)):
    """Valid-padding 2-D convolution; x (in_ch, T, F), w (out, in, kt, kf)."""
    in_ch, T, F = x.shape
    out_ch, w_in, kt, kf = w.shape
    if w_in != in_ch:
        raise ValueError(f"channel mismatch: input {in_ch}, kernel {w_in}")
    if T < kt or F < kf:
        raise ValueError(f"input {T}x{F} smaller than kernel {kt}x{kf}")
    st, sf = stride
    win = np.lib.stride_tricks.sliding_window_view(x, (kt, kf), axis=(1, 2))
    win = win[:, ::st, ::sf]  # (in_ch, T', F', kt, kf)
    return np.einsum("cijtf,octf->oij", win, w)


def _pad_same(x, kernel, stride):
    """Zero-pad so conv2d keeps the time length and yields ceil(F/stride)
    frequency bins (the 33-bin grid of the 64-point FFT must survive all
    five stride-2 layers)."""
    _, T, F = x.shape
    kt, kf = kernel
    _, sf = stride
    pt = kt - 1
    pf = max((-(-F // sf) - 1) * sf + kf - F, 0)
    return np.pad(
        x, ((0, 0), (pt // 2, pt - pt // 2), (pf // 2, pf - pf // 2))
    )


def discriminator_forward(layers, spectrogram, cfg=None):
    """Score map of one discriminator over a (frames, bins) sqrt-magnitude
    spectrogram."""
    cfg = cfg or DiscriminatorConfig()
    x = np.asarray(spectrogram, dtype=np.float64)[None]
    for i, layer in enumerate(layers):
        stride = (1, cfg.freq_stride)
        x = conv2d(_pad_same(x, cfg.kernel, stride), layer.kernel(), stride)
        if i < len(layers) - 1:
            x = leaky_relu(x, cfg.leaky_slope)
    return x[0]


def lsgan_losses(real_scores, fake_scores):
    """Least-squares GAN objectives summed over discriminators.

    d_loss = sum_k E[(D_k(real) - 1)^2] + E[D_k(fake)^2];
    g_loss = sum_k E[(D_k(fake) - 1)^2]  (the caller adds L_aux).
    """
    if len(real_scores) != len(fake_scores):
        raise ValueError("score lists differ in length")
    d_loss = 0.0
    g_loss = 0.0
    for real, fake in zip(real_scores, fake_scores):
        real = np.asarray(real, dtype=np.float64)
        fake = np.asarray(fake, dtype=np.float64)
        d_loss += float(np.mean((real - 1.0) ** 2) + np.mean(fake**2))
        g_loss += float(np.mean((fake - 1.0) ** 2))
    return d_loss, g_loss
