"""Shared signal/feature builders for the test suite."""

import numpy as np

from fwgan.features import FeatureFrame, SignalBuffer


def tone(freq, seconds=1.0, sr=16000, amp=0.5):
    t = np.arange(int(seconds * sr)) / sr
    return SignalBuffer(amp * np.sin(2 * np.pi * freq * t))


def sawtooth(freq, seconds=1.0, sr=16000, amp=0.5):
    t = np.arange(int(seconds * sr)) / sr
    return SignalBuffer(amp * (2.0 * ((freq * t) % 1.0) - 1.0))


def random_features(n, seed=0):
    rng = np.random.default_rng(seed)
    return [
        FeatureFrame(
            rng.normal(0.0, 1.0, size=18),
            int(rng.integers(32, 289)),
            float(rng.uniform(-1.0, 1.0)),
            frame_index=i,
        )
        for i in range(n)
    ]
