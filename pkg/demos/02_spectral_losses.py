"""Multi-resolution spectral losses on progressively degraded signals.

Shows how L_sc and the sqrt-magnitude l1 term respond to additive noise and
gain errors across all six STFT resolutions.
"""

import numpy as np

from fwgan.losses import spectral_losses

rng = np.random.default_rng(0)
x = rng.normal(0.0, 0.3, 16000)

print("additive noise sweep (L_aux should grow with noise):")
for snr_db in (40, 20, 10, 3):
    noise = rng.normal(0.0, 0.3 * 10 ** (-snr_db / 20.0), len(x))
    rep = spectral_losses(x, x + noise)
    print(f"  SNR {snr_db:>3} dB -> L_aux = {rep.l_aux:.4f}")

print()
print("gain error sweep:")
for g in (1.0, 0.9, 0.5):
    rep = spectral_losses(x, g * x)
    print(f"  gain {g:.1f} -> L_aux = {rep.l_aux:.4f}")

print()
print("full per-resolution report for the 0.5-gain case:")
print(spectral_losses(x, 0.5 * x).as_text())
