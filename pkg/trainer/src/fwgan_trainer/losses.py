"""Differentiable training losses.

Mirrors the engine's loss definitions exactly (same framing: symmetric Hann
window the size of the FFT, hop = fft/4, centered frames with reflect
padding) so the two implementations agree to float64 rounding -- the
cross-component parity test holds them to 1e-4 relative.
"""

from dataclasses import dataclass

import torch
from torch import nn

FFT_SIZES = (64, 128, 256, 512, 1024, 2048)

_WINDOW_CACHE = {}


def _window(n, dtype, device):
    key = (n, dtype, device)
    if key not in _WINDOW_CACHE:
        # symmetric Hann, matching numpy.hanning
        _WINDOW_CACHE[key] = torch.hann_window(
            n, periodic=False, dtype=dtype, device=device
        )
    return _WINDOW_CACHE[key]


def stft_mag(x, n_fft):
    """(batch, frames, bins) raw STFT magnitudes."""
    if x.dim() == 1:
        x = x.unsqueeze(0)
    if x.shape[-1] < n_fft:
        raise ValueError(f"signal length {x.shape[-1]} < FFT size {n_fft}")
    spec = torch.stft(
        x,
        n_fft,
        hop_length=n_fft // 4,
        window=_window(n_fft, x.dtype, x.device),
        center=True,
        pad_mode="reflect",
        return_complex=True,
    )
    return spec.abs().transpose(1, 2)


def spectral_losses(x, x_hat, fft_sizes=FFT_SIZES):
    """Per-resolution (L_sc, L_mag) pairs and their mean L_aux.

    L_sc = ||S - S_hat||_F / ||S||_F on raw magnitudes; L_mag is the mean l1
    distance of sqrt-compressed magnitudes.
    """
    per_res = []
    total = x.new_zeros(())
    for n_fft in fft_sizes:
        s = stft_mag(x, n_fft)
        sh = stft_mag(x_hat, n_fft)
        l_sc = torch.linalg.norm(s - sh) / torch.linalg.norm(s).clamp_min(1e-12)
        l_mag = (torch.sqrt(s) - torch.sqrt(sh)).abs().mean()
        per_res.append((l_sc, l_mag))
        total = total + l_sc + l_mag
    return per_res, total / len(fft_sizes)


def l_aux(x, x_hat, fft_sizes=FFT_SIZES):
    return spectral_losses(x, x_hat, fft_sizes)[1]


class Discriminator(nn.Module):
    """One spectrogram discriminator: five weight-normalized 2-D
    convolutions (channels 32-32-32-32-1, kernel 3x9, stride 1x2 in
    frequency, zero same-padding), LeakyReLU(0.2) between layers."""

    def __init__(self, channels=(32, 32, 32, 32, 1), kernel=(3, 9)):
        super().__init__()
        layers = []
        in_ch = 1
        for out_ch in channels:
            conv = nn.Conv2d(
                in_ch,
                out_ch,
                kernel,
                stride=(1, 2),
                padding=(kernel[0] // 2, kernel[1] // 2),
                bias=False,
            )
            layers.append(nn.utils.parametrizations.weight_norm(conv))
            in_ch = out_ch
        self.convs = nn.ModuleList(layers)

    def forward(self, spectrogram):
        # (batch, frames, bins) sqrt-magnitude grid -> (batch, T, F) scores
        x = spectrogram.unsqueeze(1)
        for i, conv in enumerate(self.convs):
            x = conv(x)
            if i < len(self.convs) - 1:
                x = torch.nn.functional.leaky_relu(x, 0.2)
        return x.squeeze(1)


class DiscriminatorBank(nn.Module):
    """One discriminator per STFT resolution, fed sqrt magnitudes."""

    def __init__(self, fft_sizes=FFT_SIZES):
        super().__init__()
        self.fft_sizes = tuple(fft_sizes)
        self.discs = nn.ModuleList(Discriminator() for _ in self.fft_sizes)

    def forward(self, x):
        return [
            d(torch.sqrt(stft_mag(x, n))) for d, n in zip(self.discs, self.fft_sizes)
        ]


def lsgan_d_loss(real_scores, fake_scores):
    """sum_k E[(D_k(real) - 1)^2] + E[D_k(fake)^2]."""
    loss = real_scores[0].new_zeros(())
    for real, fake in zip(real_scores, fake_scores):
        loss = loss + ((real - 1.0) ** 2).mean() + (fake**2).mean()
    return loss


def lsgan_g_loss(fake_scores):
    """sum_k E[(D_k(fake) - 1)^2]."""
    loss = fake_scores[0].new_zeros(())
    for fake in fake_scores:
        loss = loss + ((fake - 1.0) ** 2).mean()
    return loss


@dataclass
class GradcheckReport:
    checked: int
    max_rel_error: float
    kinks_skipped: int

    @property
    def passed(self):
        return self.max_rel_error < 1e-3


def gradcheck_l_aux(x, x_hat, n_coords=24, eps=1e-4, fft_sizes=(256,), seed=0):
    """Central finite differences of L_aux w.r.t. single samples of x_hat
    against the autograd gradient.

    The l1 term is non-differentiable where a sqrt-magnitude difference
    crosses zero; such coordinates are detected by their one-sided
    differences disagreeing and skipped.
    """
    x = x.detach().double()
    x_hat = x_hat.detach().double().requires_grad_(True)
    loss = l_aux(x, x_hat, fft_sizes)
    (grad,) = torch.autograd.grad(loss, x_hat)
    loss0 = loss.item()

    gen = torch.Generator().manual_seed(seed)
    coords = torch.randperm(x_hat.numel(), generator=gen)[:n_coords]
    max_rel = 0.0
    skipped = 0
    checked = 0
    with torch.no_grad():
        for c in coords:
            flat = x_hat.reshape(-1)
            orig = flat[c].item()
            flat[c] = orig + eps
            hi = l_aux(x, x_hat, fft_sizes).item()
            flat[c] = orig - eps
            lo = l_aux(x, x_hat, fft_sizes).item()
            flat[c] = orig
            d_hi = (hi - loss0) / eps
            d_lo = (loss0 - lo) / eps
            scale = max(abs(d_hi), abs(d_lo), 1e-8)
            if abs(d_hi - d_lo) > 0.05 * scale:
                skipped += 1  # kink within the stencil
                continue
            fd = 0.5 * (d_hi + d_lo)
            an = grad.reshape(-1)[c].item()
            max_rel = max(max_rel, abs(fd - an) / max(abs(fd), abs(an), 1e-8))
            checked += 1
    return GradcheckReport(checked=checked, max_rel_error=max_rel, kinks_skipped=skipped)
