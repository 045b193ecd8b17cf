"""Dataset plumbing: synthetic speech, the engine's file formats, and the
perceptual-domain training targets.

The trainer talks to the inference engine only through its CLI and file
formats: WAVs go in, `fwgan analyze` produces feature files, and this
module parses them (raw little-endian float32, 20 values per frame). The
target-domain filtering (pre-emphasis and the weighting filter
A(z/0.92)/(1 - 0.85 z^-1) with per-frame LPC from the cepstral features) is
reimplemented here from its published definition rather than imported.
"""

import shutil
import subprocess
import wave
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.fft import idct
from scipy.signal import lfilter, lfiltic

SAMPLE_RATE = 16000
FRAME = 160
FEATURE_WIDTH = 20
LPC_ORDER = 16
GAMMA1, GAMMA2 = 0.92, 0.85
PREEMPH = 0.85


def fwgan_cli():
    path = shutil.which("fwgan")
    if path is None:
        raise RuntimeError("fwgan CLI not found on PATH; install the engine package")
    return path


# --- file formats ---------------------------------------------------------


def write_wav(path, samples):
    pcm = np.clip(np.round(np.asarray(samples) * 32768.0), -32768, 32767).astype(
        "<i2"
    )
    with wave.open(str(path), "wb") as fh:
        fh.setnchannels(1)
        fh.setsampwidth(2)
        fh.setframerate(SAMPLE_RATE)
        fh.writeframes(pcm.tobytes())


def read_wav(path):
    with wave.open(str(path), "rb") as fh:
        if fh.getnchannels() != 1 or fh.getsampwidth() != 2:
            raise ValueError(f"{path}: expected 16-bit mono")
        pcm = np.frombuffer(fh.readframes(fh.getnframes()), dtype="<i2")
    return pcm.astype(np.float64) / 32768.0


def read_features(path):
    """(n_frames, 20) rows: 18 cepstra, quantized pitch index, correlation."""
    raw = np.fromfile(path, dtype="<f4")
    if raw.size % FEATURE_WIDTH:
        raise ValueError(f"{path}: size not a multiple of {FEATURE_WIDTH} floats")
    return raw.reshape(-1, FEATURE_WIDTH)


def analyze(wav_path, features_path):
    """Run the engine's feature extractor."""
    subprocess.run(
        [fwgan_cli(), "analyze", "--in", str(wav_path), "--out", str(features_path)],
        check=True,
        capture_output=True,
    )
    return read_features(features_path)


# --- synthetic speech -----------------------------------------------------


def synthetic_speech(seconds, seed=0):
    """Pitch- and amplitude-modulated pulse trains with breathy noise:
    crude, but voiced enough for the feature extractor and cheap to make by
    the minute."""
    rng = np.random.default_rng(seed)
    n = int(seconds * SAMPLE_RATE)
    out = np.zeros(n)
    t = np.arange(n) / SAMPLE_RATE
    f0 = 120.0 * 2 ** (
        0.5 * np.sin(2 * np.pi * 0.7 * t + rng.uniform(0, 2 * np.pi))
        + 0.1 * np.sin(2 * np.pi * 3.1 * t)
    )
    phase = np.cumsum(f0) / SAMPLE_RATE
    pulses = ((phase % 1.0) < (f0 / SAMPLE_RATE)).astype(np.float64)
    # a couple of formant-ish resonators
    for freq, bw in ((500.0, 80.0), (1500.0, 120.0), (2500.0, 200.0)):
        r = np.exp(-np.pi * bw / SAMPLE_RATE)
        theta = 2 * np.pi * freq / SAMPLE_RATE
        out += lfilter([1.0], [1.0, -2 * r * np.cos(theta), r * r], pulses)
    out += 0.02 * rng.normal(size=n)
    envelope = 0.55 + 0.45 * np.sin(2 * np.pi * 1.3 * t + rng.uniform(0, 2 * np.pi))
    out *= envelope
    return 0.5 * out / np.max(np.abs(out))


# --- perceptual-domain targets --------------------------------------------


def _bark_centers(n_bands=18, f_hi=8000.0):
    edges = 600.0 * np.sinh(
        np.linspace(0.0, 6.0 * np.arcsinh(f_hi / 600.0), n_bands + 2) / 6.0
    )
    return edges[1:-1]


def _levinson(r, order):
    a = np.zeros(order)
    err = r[0]
    for i in range(1, order + 1):
        acc = r[i] - a[: i - 1] @ r[i - 1 : 0 : -1]
        k = acc / err
        new = a.copy()
        new[i - 1] = k
        new[: i - 1] = a[: i - 1] - k * a[i - 2 :: -1][: i - 1]
        a = new
        err *= 1.0 - k * k
        if err <= 0:
            break
    return a


def lpc_from_cepstrum(coeffs):
    """Order-16 predictor from one 18-coefficient cepstral vector."""
    log_e = idct(np.asarray(coeffs, dtype=np.float64), type=2, norm="ortho")
    power = np.exp(np.clip(log_e, -100.0, 100.0))
    grid = np.linspace(0.0, 8000.0, 257)
    spec = np.interp(grid, _bark_centers(), power)
    r = np.fft.irfft(spec)[: LPC_ORDER + 1]
    if r[0] <= 0:
        return np.zeros(LPC_ORDER)
    lags = np.arange(LPC_ORDER + 1)
    r = r * np.exp(-0.5 * (2 * np.pi * 60.0 * lags / SAMPLE_RATE) ** 2)
    r[0] *= 1.0 + 1e-4
    return _levinson(r, LPC_ORDER)


def to_perceptual(samples, features):
    """Natural-domain speech -> the flattened domain the generator is
    trained in: pre-emphasis, then A(z/g1)/(1 - g2 z^-1) with per-frame LPC
    from the cepstral features. Truncated to whole feature frames."""
    n = len(features) * FRAME
    x = lfilter([1.0, -PREEMPH], [1.0], samples[:n])
    y = np.empty_like(x)
    x_hist = np.zeros(LPC_ORDER)
    zi_pole = np.zeros(1)
    for i, row in enumerate(features):
        a = lpc_from_cepstrum(row[:18])
        b = np.concatenate([[1.0], -a * GAMMA1 ** np.arange(1, LPC_ORDER + 1)])
        lo, hi = i * FRAME, (i + 1) * FRAME
        zi = lfiltic(b, [1.0], y=[], x=x_hist)
        u, _ = lfilter(b, [1.0], x[lo:hi], zi=zi)
        y[lo:hi], zi_pole = lfilter([1.0], [1.0, -GAMMA2], u, zi=zi_pole)
        x_hist = x[lo:hi][::-1][:LPC_ORDER]
    return y


# --- dataset --------------------------------------------------------------


@dataclass
class Dataset:
    """Aligned (features, perceptual-domain target) arrays plus slicing."""

    features: np.ndarray  # (n_frames, 20)
    target: np.ndarray  # (n_frames * 160,)

    def __post_init__(self):
        if len(self.features) == 0:
            raise ValueError("empty dataset")
        if len(self.target) != len(self.features) * FRAME:
            raise ValueError("features and target are misaligned")

    @property
    def seconds(self):
        return len(self.target) / SAMPLE_RATE

    def sample_batch(self, batch_size, length_frames, rng):
        """(features, pitch_idx, target) tensors for `batch_size` random
        windows of `length_frames` frames."""
        n = len(self.features)
        starts = rng.integers(0, n - length_frames + 1, size=batch_size)
        feats = np.stack(
            [self.features[s : s + length_frames] for s in starts]
        ).astype(np.float32)
        target = np.stack(
            [self.target[s * FRAME : (s + length_frames) * FRAME] for s in starts]
        ).astype(np.float32)
        net_in = np.concatenate([feats[:, :, :18], feats[:, :, 19:20]], axis=2)
        pitch = np.clip(np.round(feats[:, :, 18]), 0, 255).astype(np.int64)
        return net_in, pitch, target


def build_dataset(workdir, seconds, seed=0):
    """Synthesize speech, run the engine's `analyze` on it, and compute the
    aligned perceptual-domain target."""
    workdir = Path(workdir)
    workdir.mkdir(parents=True, exist_ok=True)
    if seconds <= 0:
        raise ValueError("dataset length must be positive")
    speech = synthetic_speech(seconds, seed)
    wav = workdir / f"speech_{seed}.wav"
    write_wav(wav, speech)
    feats = analyze(wav, workdir / f"speech_{seed}.f32")
    target = to_perceptual(read_wav(wav), feats)
    return Dataset(features=feats, target=target)
