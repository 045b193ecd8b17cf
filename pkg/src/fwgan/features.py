"""Conditioning feature extraction from 16 kHz mono speech.

Produces one frame per 10 ms hop: 18 Bark-frequency cepstral coefficients
(DCT-II of log Bark-filterbank energies), an integer pitch period and a
normalized pitch correlation. Analysis windows are 20 ms Hann with 5 ms of
look-ahead relative to the frame they label.

Also owns the SignalBuffer type (samples plus a filter-domain tag), WAV I/O
and the raw float32 feature file layout.
"""

import math
import wave
from dataclasses import dataclass, field

import numpy as np
from scipy.fft import dct
from scipy.signal import lfilter

DOMAIN_NATURAL = "natural"
DOMAIN_PREEMPH = "preemphasized"
DOMAIN_PERCEPTUAL = "perceptual"

FEATURE_FILE_WIDTH = 20  # 18 BFCC + quantized period index + correlation


class DomainError(ValueError):
    """Signal is in the wrong filter domain for the requested operation."""


@dataclass
class SignalBuffer:
    """Mono sample sequence tagged with its filter domain."""

    samples: np.ndarray
    sample_rate: int = 16000
    domain: str = DOMAIN_NATURAL

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float64)
        if self.samples.ndim != 1:
            raise ValueError("SignalBuffer expects a 1-D sample array")

    def __len__(self):
        return len(self.samples)

    def require_domain(self, domain):
        if self.domain != domain:
            raise DomainError(f"signal is {self.domain!r}, expected {domain!r}")


def read_wav(path):
    """Read a 16-bit PCM mono WAV into a natural-domain SignalBuffer in
    [-1, 1]."""
    with wave.open(str(path), "rb") as fh:
        if fh.getnchannels() != 1:
            raise ValueError(f"{path}: expected mono, got {fh.getnchannels()} channels")
        if fh.getsampwidth() != 2:
            raise ValueError(f"{path}: expected 16-bit PCM")
        rate = fh.getframerate()
        raw = fh.readframes(fh.getnframes())
    samples = np.frombuffer(raw, dtype="<i2").astype(np.float64) / 32768.0
    return SignalBuffer(samples, sample_rate=rate)


def write_wav(path, sig):
    """Write a SignalBuffer as 16-bit PCM mono WAV (values clipped)."""
    pcm = np.clip(np.round(sig.samples * 32768.0), -32768, 32767).astype("<i2")
    with wave.open(str(path), "wb") as fh:
        fh.setnchannels(1)
        fh.setsampwidth(2)
        fh.setframerate(sig.sample_rate)
        fh.writeframes(pcm.tobytes())


@dataclass
class AnalysisConfig:
    sample_rate: int = 16000
    frame_hop: int = 160
    window: int = 320
    feature_rate: int = 100
    preemph: float = 0.85
    pitch_min_lag: int = 32
    pitch_max_lag: int = 288
    n_bands: int = 18
    energy_floor: float = 1e-9
    lookahead: int = 80  # 5 ms at 16 kHz

    def __post_init__(self):
        if self.frame_hop * self.feature_rate != self.sample_rate:
            raise ValueError("frame_hop * feature_rate must equal sample_rate")
        if self.window != 2 * self.frame_hop:
            raise ValueError("window must be two hops (20 ms)")


@dataclass
class FeatureFrame:
    """One 100 Hz conditioning vector."""

    bfcc: np.ndarray
    pitch_period: int
    pitch_correlation: float
    frame_index: int = 0

    def __post_init__(self):
        self.bfcc = np.asarray(self.bfcc, dtype=np.float32)
        if self.bfcc.shape != (18,):
            raise ValueError(f"expected 18 BFCCs, got shape {self.bfcc.shape}")
        if not -1.0 <= self.pitch_correlation <= 1.0:
            raise ValueError(f"pitch correlation {self.pitch_correlation} out of [-1,1]")


def pre_emphasis(sig, alpha=0.85):
    """y[n] = x[n] - alpha*x[n-1]; tags the output pre-emphasized."""
    sig.require_domain(DOMAIN_NATURAL)
    y = lfilter([1.0, -alpha], [1.0], sig.samples)
    return SignalBuffer(y, sig.sample_rate, DOMAIN_PREEMPH)


def de_emphasis(sig, alpha=0.85):
    """Inverse of pre_emphasis: x[n] = y[n] + alpha*x[n-1]."""
    sig.require_domain(DOMAIN_PREEMPH)
    x = lfilter([1.0], [1.0, -alpha], sig.samples)
    return SignalBuffer(x, sig.sample_rate, DOMAIN_NATURAL)


def _hz_to_bark(f):
    return 6.0 * np.arcsinh(np.asarray(f, dtype=np.float64) / 600.0)


def _bark_to_hz(b):
    return 600.0 * np.sinh(np.asarray(b, dtype=np.float64) / 6.0)


def bark_band_edges(n_bands=18, f_lo=0.0, f_hi=8000.0):
    """n_bands+2 frequency points, uniform on the Bark-like arcsinh scale.

    This table is frozen: the exact band placement is an implementation
    constant, not something callers may vary per file.
    """
    b = np.linspace(_hz_to_bark(f_lo), _hz_to_bark(f_hi), n_bands + 2)
    edges = _bark_to_hz(b)
    edges[0], edges[-1] = f_lo, f_hi
    return edges


def bark_band_centers(n_bands=18, f_lo=0.0, f_hi=8000.0):
    return bark_band_edges(n_bands, f_lo, f_hi)[1:-1]


def bark_filterbank(n_fft=320, sample_rate=16000, n_bands=18):
    """Triangular filterbank matrix (n_bands, n_fft//2+1).

    Rows are normalized to unit sum, so a band energy estimates the average
    power density inside the band: white noise yields a flat band-energy
    profile regardless of bandwidth.
    """
    edges = bark_band_edges(n_bands, 0.0, sample_rate / 2.0)
    freqs = np.fft.rfftfreq(n_fft, 1.0 / sample_rate)
    fb = np.zeros((n_bands, len(freqs)))
    for b in range(n_bands):
        lo, mid, hi = edges[b], edges[b + 1], edges[b + 2]
        up = (freqs - lo) / max(mid - lo, 1e-9)
        down = (hi - freqs) / max(hi - mid, 1e-9)
        fb[b] = np.clip(np.minimum(up, down), 0.0, 1.0)
        fb[b] /= max(fb[b].sum(), 1e-9)
    return fb


_FILTERBANK_CACHE = {}


def _filterbank(cfg):
    key = (cfg.window, cfg.sample_rate, cfg.n_bands)
    if key not in _FILTERBANK_CACHE:
        _FILTERBANK_CACHE[key] = bark_filterbank(*key)
    return _FILTERBANK_CACHE[key]


def bfcc(frame, cfg=None):
    """BFCCs of one already-windowed, pre-emphasized 20 ms frame.

    DCT-II (orthonormal) of log Bark-filterbank energies; energies are
    floored before the log so silence is well defined.
    """
    cfg = cfg or AnalysisConfig()
    frame = np.asarray(frame, dtype=np.float64)
    if frame.shape != (cfg.window,):
        raise ValueError(f"expected {cfg.window}-sample frame, got {frame.shape}")
    spec = np.abs(np.fft.rfft(frame)) ** 2
    energies = _filterbank(cfg) @ spec
    log_e = np.log(np.maximum(energies, cfg.energy_floor))
    return dct(log_e, type=2, norm="ortho")


def pitch_estimate(history, cfg=None):
    """Normalized-autocorrelation pitch over the configured lag range.

    `history` must hold at least window + max_lag samples; the correlation
    compares the final `window` samples against themselves shifted back by
    each candidate lag. Returns (period, correlation), correlation clamped
    to [-1, 1]. An all-quiet window returns (min_lag, 0.0).
    """
    cfg = cfg or AnalysisConfig()
    history = np.asarray(history, dtype=np.float64)
    need = cfg.window + cfg.pitch_max_lag
    if len(history) < need:
        raise ValueError(f"need at least {need} samples of history, got {len(history)}")
    tail = history[-need:]
    cur = tail[-cfg.window :]
    e_cur = float(cur @ cur)
    if e_cur < 1e-12:
        return cfg.pitch_min_lag, 0.0
    # windows[i] = tail[i : i+window]; lag L corresponds to index max_lag - L
    windows = np.lib.stride_tricks.sliding_window_view(tail, cfg.window)
    lags = np.arange(cfg.pitch_min_lag, cfg.pitch_max_lag + 1)
    past = windows[cfg.pitch_max_lag - lags]
    dots = past @ cur
    energies = np.einsum("ij,ij->i", past, past)
    denom = np.sqrt(e_cur * np.maximum(energies, 1e-12))
    corr = dots / denom
    peak = float(np.max(corr))
    # an exactly periodic signal correlates equally at every lag multiple;
    # take the smallest local maximum within 3% of the peak so the
    # fundamental wins over its multiples
    interior = np.zeros_like(corr, dtype=bool)
    interior[1:-1] = (corr[1:-1] >= corr[:-2]) & (corr[1:-1] >= corr[2:])
    interior[0] = corr[0] >= corr[1]
    interior[-1] = corr[-1] >= corr[-2]
    candidates = np.flatnonzero(interior & (corr >= peak - 0.03 * abs(peak)))
    best = int(candidates[0]) if len(candidates) else int(np.argmax(corr))
    return int(lags[best]), float(np.clip(corr[best], -1.0, 1.0))


def quantize_period(period, cfg=None):
    """Map a pitch period in samples to a 0..255 embedding index, linear in
    log-period over the lag range."""
    cfg = cfg or AnalysisConfig()
    p = min(max(period, cfg.pitch_min_lag), cfg.pitch_max_lag)
    t = (math.log(p) - math.log(cfg.pitch_min_lag)) / (
        math.log(cfg.pitch_max_lag) - math.log(cfg.pitch_min_lag)
    )
    return int(round(t * 255.0))


def dequantize_period(index, cfg=None):
    cfg = cfg or AnalysisConfig()
    if not 0 <= index <= 255:
        raise ValueError(f"period index {index} out of [0, 255]")
    t = index / 255.0
    return int(
        round(
            math.exp(
                math.log(cfg.pitch_min_lag)
                + t * (math.log(cfg.pitch_max_lag) - math.log(cfg.pitch_min_lag))
            )
        )
    )


def analyze(wav, cfg=None):
    """Extract one FeatureFrame per 10 ms hop of a 16 kHz natural-domain
    signal.

    Pre-emphasis is applied to the whole utterance first. The BFCC window
    for frame i spans samples [i*hop - 80, i*hop + 240): 5 ms of look-ahead
    past the 10 ms frame the features label. Pitch runs on the natural
    signal using history up to the same look-ahead point.
    """
    cfg = cfg or AnalysisConfig()
    wav.require_domain(DOMAIN_NATURAL)
    if wav.sample_rate != cfg.sample_rate:
        raise ValueError(f"expected {cfg.sample_rate} Hz input, got {wav.sample_rate}")
    n_frames = len(wav) // cfg.frame_hop
    if n_frames == 0:
        return []

    pre = pre_emphasis(wav, cfg.preemph).samples
    pad = cfg.window + cfg.pitch_max_lag
    natural = np.concatenate([np.zeros(pad), wav.samples])
    pre_padded = np.concatenate([np.zeros(cfg.frame_hop), pre, np.zeros(cfg.window)])
    window_fn = np.hanning(cfg.window)

    frames = []
    for i in range(n_frames):
        # pre_padded index 0 is sample -hop, so frame window starts at
        # i*hop - lookahead... offset: sample s sits at pre_padded[s + hop]
        start = i * cfg.frame_hop - cfg.lookahead + cfg.frame_hop
        seg = pre_padded[start : start + cfg.window]
        coeffs = bfcc(seg * window_fn, cfg)
        end_natural = min(i * cfg.frame_hop + cfg.frame_hop + cfg.lookahead, len(wav))
        period, corr = pitch_estimate(natural[: end_natural + pad], cfg)
        frames.append(FeatureFrame(coeffs, period, corr, frame_index=i))
    return frames


def write_features(path, frames, cfg=None):
    """Raw little-endian float32, 20 values per frame: 18 BFCC, quantized
    period index (stored as a real), correlation. No header; the frame
    count is implied by the file size."""
    cfg = cfg or AnalysisConfig()
    rows = np.zeros((len(frames), FEATURE_FILE_WIDTH), dtype="<f4")
    for i, f in enumerate(frames):
        rows[i, :18] = f.bfcc
        rows[i, 18] = quantize_period(f.pitch_period, cfg)
        rows[i, 19] = f.pitch_correlation
    with open(path, "wb") as fh:
        fh.write(rows.tobytes())


def read_features(path, cfg=None):
    cfg = cfg or AnalysisConfig()
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) % (FEATURE_FILE_WIDTH * 4):
        raise ValueError(
            f"{path}: size {len(raw)} is not a multiple of "
            f"{FEATURE_FILE_WIDTH * 4}-byte frames"
        )
    rows = np.frombuffer(raw, dtype="<f4").reshape(-1, FEATURE_FILE_WIDTH)
    frames = []
    for i, row in enumerate(rows):
        idx = int(round(float(row[18])))
        frames.append(
            FeatureFrame(
                row[:18].copy(),
                dequantize_period(idx, cfg),
                float(np.clip(row[19], -1.0, 1.0)),
                frame_index=i,
            )
        )
    return frames
