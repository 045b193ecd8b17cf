"""Perceptual filtering chain used around the generator.

The synthesis network is trained and run in a spectrally flattened domain:
pre-emphasized speech filtered by W(z) = A(z/g1) / (1 - g2 z^-1) with
g1 = 0.92, g2 = 0.85, where A(z) is an order-16 LPC analysis filter derived
per frame from the BFCC features. This module computes A(z) from BFCCs and
applies W(z) and its inverse with filter state carried continuously across
10 ms frame boundaries.

Convention: A(z) = 1 - sum_k a[k-1] z^-k, i.e. `a` holds the predictor
coefficients of x[n] ~= sum_k a[k-1] x[n-k].
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.fft import idct
from scipy.signal import lfilter, lfiltic

from .features import (
    DOMAIN_PERCEPTUAL,
    DOMAIN_PREEMPH,
    SignalBuffer,
    bark_band_centers,
)

LPC_ORDER = 16
_SPECTRUM_BINS = 257
_NOISE_FLOOR = 1e-4
_LAG_WINDOW_HZ = 60.0


@dataclass
class LpcCoeffs:
    """Order-16 predictor coefficients, stabilized."""

    a: np.ndarray

    def __post_init__(self):
        self.a = np.asarray(self.a, dtype=np.float64)
        if self.a.shape != (LPC_ORDER,):
            raise ValueError(f"expected {LPC_ORDER} coefficients, got {self.a.shape}")

    def analysis_polynomial(self, gamma=1.0):
        """Coefficients of A(z/gamma): [1, -a1*g, -a2*g^2, ...]."""
        scaled = self.a * gamma ** np.arange(1, LPC_ORDER + 1)
        return np.concatenate([[1.0], -scaled])


@dataclass
class WeightingParams:
    gamma1: float = 0.92
    gamma2: float = 0.85

    def __post_init__(self):
        if not 0.0 < self.gamma2 <= self.gamma1 < 1.0:
            raise ValueError(
                f"require 0 < gamma2 <= gamma1 < 1, got {self.gamma2}, {self.gamma1}"
            )


def levinson_durbin(r, order):
    """Solve the autocorrelation normal equations by Levinson-Durbin.

    Returns predictor coefficients a (x[n] ~= sum a[k-1] x[n-k]) and the
    final prediction error energy.
    """
    r = np.asarray(r, dtype=np.float64)
    if len(r) < order + 1:
        raise ValueError(f"need {order + 1} autocorrelation lags, got {len(r)}")
    if r[0] <= 0:
        return np.zeros(order), 0.0
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
    return a, err


def lpc_from_bfcc(coeffs):
    """Order-16 LPC from one 18-coefficient BFCC vector.

    Inverse DCT to per-band log energies, exponentiate, interpolate the band
    powers onto a 257-bin linear-frequency grid, inverse FFT to an
    autocorrelation, then lag-window + relative noise floor and
    Levinson-Durbin. The lag window and floor guarantee a stable 1/A(z).
    """
    coeffs = np.asarray(coeffs, dtype=np.float64)
    if coeffs.shape != (18,):
        raise ValueError(f"expected 18 BFCCs, got {coeffs.shape}")
    if not np.all(np.isfinite(coeffs)):
        raise ValueError("non-finite BFCCs")
    log_e = idct(coeffs, type=2, norm="ortho")
    power = np.exp(np.clip(log_e, -100.0, 100.0))
    centers = bark_band_centers(18, 0.0, 8000.0)
    grid = np.linspace(0.0, 8000.0, _SPECTRUM_BINS)
    spec = np.interp(grid, centers, power)
    r = np.fft.irfft(spec)[: LPC_ORDER + 1]
    if r[0] <= 0:
        return LpcCoeffs(np.zeros(LPC_ORDER))
    lags = np.arange(LPC_ORDER + 1)
    lag_window = np.exp(-0.5 * (2.0 * math.pi * _LAG_WINDOW_HZ * lags / 16000.0) ** 2)
    r = r * lag_window
    r[0] *= 1.0 + _NOISE_FLOOR
    a, _ = levinson_durbin(r, LPC_ORDER)
    return LpcCoeffs(a)


def _check_frames(sig, lpcs, frame_len=160):
    n_frames = -(-len(sig) // frame_len)  # ceil
    if len(lpcs) != n_frames:
        raise ValueError(f"signal needs {n_frames} LPC frames, got {len(lpcs)}")
    return n_frames


def weighting_filter(sig, lpcs, params=None, frame_len=160):
    """Apply W(z) = A(z/g1) * 1/(1 - g2 z^-1) with per-frame LPC.

    The FIR stage carries a 16-sample input history and the one-pole stage
    its output state across frame boundaries, so coefficient switches are
    continuous in state. Input must be pre-emphasized; output is tagged
    perceptual.
    """
    params = params or WeightingParams()
    sig.require_domain(DOMAIN_PREEMPH)
    n_frames = _check_frames(sig, lpcs, frame_len)
    x = sig.samples
    y = np.empty_like(x)
    x_hist = np.zeros(LPC_ORDER)
    pole = np.array([1.0, -params.gamma2])
    zi_pole = np.zeros(1)
    for i in range(n_frames):
        lo, hi = i * frame_len, min((i + 1) * frame_len, len(x))
        b = lpcs[i].analysis_polynomial(params.gamma1)
        zi = lfiltic(b, [1.0], y=[], x=x_hist)
        u, _ = lfilter(b, [1.0], x[lo:hi], zi=zi)
        y[lo:hi], zi_pole = lfilter([1.0], pole, u, zi=zi_pole)
        n = hi - lo
        x_hist = np.concatenate([x[lo:hi][::-1], x_hist])[:LPC_ORDER]
    return SignalBuffer(y, sig.sample_rate, DOMAIN_PERCEPTUAL)


def inverse_weighting(sig, lpcs, params=None, frame_len=160):
    """Apply W(z)^-1 = (1 - g2 z^-1) * 1/A(z/g1); exact inverse of
    weighting_filter up to float64 rounding."""
    params = params or WeightingParams()
    sig.require_domain(DOMAIN_PERCEPTUAL)
    n_frames = _check_frames(sig, lpcs, frame_len)
    y = sig.samples
    x = np.empty_like(y)
    y_prev = 0.0
    x_hist = np.zeros(LPC_ORDER)
    for i in range(n_frames):
        lo, hi = i * frame_len, min((i + 1) * frame_len, len(y))
        seg = y[lo:hi]
        u = np.empty_like(seg)
        u[0] = seg[0] - params.gamma2 * y_prev
        u[1:] = seg[1:] - params.gamma2 * seg[:-1]
        y_prev = seg[-1]
        a_poly = lpcs[i].analysis_polynomial(params.gamma1)
        zi = lfiltic([1.0], a_poly, y=x_hist, x=[])
        x[lo:hi], _ = lfilter([1.0], a_poly, u, zi=zi)
        x_hist = np.concatenate([x[lo:hi][::-1], x_hist])[:LPC_ORDER]
    return SignalBuffer(x, sig.sample_rate, DOMAIN_PREEMPH)
