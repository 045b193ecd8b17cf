"""Torch generator mirroring the inference engine's architecture.

Same tensor layout and naming as the engine's weight files so checkpoints
export directly: pitch embedding + two causal frame convolutions for
conditioning, a stack of bias-free GRUs each followed by a gated linear
unit, a projection to a per-frame latent, and a framewise convolution stack
emitting 160 samples per frame.

All fully-connected matrices (projection, framewise convolutions, GLU
gates, output) are weight-normalized: w = g * v / ||v|| with the norm taken
per output row. No layer has a bias.
"""

from dataclasses import dataclass

import torch
from torch import nn


@dataclass(frozen=True)
class ToyConfig:
    """Training-scale configuration; dimensions follow the same constraints
    the engine enforces (pitch_embed_dim + enc_conv1_out == cond_dim)."""

    cond_dim: int = 32
    gru_count: int = 2
    gru_hidden: int = 32
    latent_dim: int = 64
    fwconv_conditional_count: int = 2
    frame_out: int = 160
    feature_dim: int = 19
    pitch_levels: int = 256
    pitch_embed_dim: int = 16
    enc_conv1_out: int = 16

    def __post_init__(self):
        if self.pitch_embed_dim + self.enc_conv1_out != self.cond_dim:
            raise ValueError("cond_dim must equal pitch_embed_dim + enc_conv1_out")


class WnLinear(nn.Module):
    """Bias-free linear layer with per-row weight normalization."""

    def __init__(self, out_dim, in_dim):
        super().__init__()
        v = torch.randn(out_dim, in_dim) / in_dim**0.5
        self.v = nn.Parameter(v)
        self.g = nn.Parameter(v.norm(dim=1))

    def weight(self):
        norms = self.v.norm(dim=1, keepdim=True).clamp_min(1e-12)
        return self.v * (self.g.unsqueeze(1) / norms)

    def forward(self, x):
        return x @ self.weight().T


class Glu(nn.Module):
    def __init__(self, dim):
        super().__init__()
        self.gate = WnLinear(dim, dim)

    def forward(self, x):
        return x * torch.sigmoid(self.gate(x))


class BiasFreeGru(nn.Module):
    """GRU layer without any bias terms (torch's cell always carries them,
    and weight decay would keep re-growing a zeroed bias)."""

    def __init__(self, hidden, in_dim):
        super().__init__()

        def mat(rows, cols):
            return nn.Parameter(torch.randn(rows, cols) / cols**0.5)

        self.w_update = mat(hidden, in_dim)
        self.w_reset = mat(hidden, in_dim)
        self.w_candidate = mat(hidden, in_dim)
        self.u_update = mat(hidden, hidden)
        self.u_reset = mat(hidden, hidden)
        self.u_candidate = mat(hidden, hidden)
        self.hidden = hidden

    def forward(self, x):
        # x: (batch, frames, in_dim) -> (batch, frames, hidden)
        b, n, _ = x.shape
        # input-side products for the whole sequence at once
        wx_z = x @ self.w_update.T
        wx_r = x @ self.w_reset.T
        wx_c = x @ self.w_candidate.T
        h = x.new_zeros(b, self.hidden)
        outs = []
        for i in range(n):
            z = torch.sigmoid(wx_z[:, i] + h @ self.u_update.T)
            r = torch.sigmoid(wx_r[:, i] + h @ self.u_reset.T)
            c = torch.tanh(wx_c[:, i] + (r * h) @ self.u_candidate.T)
            h = (1.0 - z) * h + z * c
            outs.append(h)
        return torch.stack(outs, dim=1)


def _causal_k3(x):
    """(b, n, d) -> (b, n, 3d): each frame concatenated with its two
    predecessors, zero-padded at the start."""
    pad = torch.zeros_like(x[:, :2])
    xp = torch.cat([pad, x], dim=1)
    return torch.cat([xp[:, :-2], xp[:, 1:-1], xp[:, 2:]], dim=2)


class Generator(nn.Module):
    def __init__(self, cfg=None):
        super().__init__()
        cfg = cfg or ToyConfig()
        self.cfg = cfg
        self.pitch_embedding = nn.Parameter(
            torch.randn(cfg.pitch_levels, cfg.pitch_embed_dim)
            / cfg.pitch_embed_dim**0.5
        )
        self.enc_conv1 = nn.Parameter(
            torch.randn(cfg.enc_conv1_out, 3 * cfg.feature_dim)
            / (3 * cfg.feature_dim) ** 0.5
        )
        self.enc_conv2 = nn.Parameter(
            torch.randn(cfg.cond_dim, 3 * cfg.cond_dim) / (3 * cfg.cond_dim) ** 0.5
        )
        grus, gru_glus = [], []
        in_dim = cfg.cond_dim
        for _ in range(cfg.gru_count):
            grus.append(BiasFreeGru(cfg.gru_hidden, in_dim))
            gru_glus.append(Glu(cfg.gru_hidden))
            in_dim = cfg.gru_hidden
        self.grus = nn.ModuleList(grus)
        self.gru_glus = nn.ModuleList(gru_glus)
        concat = cfg.gru_count * cfg.gru_hidden + cfg.cond_dim
        self.proj_fc = WnLinear(cfg.latent_dim, concat)
        self.proj_glu = Glu(cfg.latent_dim)
        n_fw = cfg.fwconv_conditional_count + 1
        self.fw_fcs = nn.ModuleList(
            [WnLinear(cfg.latent_dim, 3 * cfg.latent_dim) for _ in range(n_fw)]
        )
        self.fw_glus = nn.ModuleList([Glu(cfg.latent_dim) for _ in range(n_fw)])
        self.output_fc = WnLinear(cfg.frame_out, cfg.latent_dim)

    def forward(self, features, pitch_index):
        """features (b, n, 19) float, pitch_index (b, n) long -> waveform
        (b, n*160) in the perceptual domain."""
        emb = self.pitch_embedding[pitch_index]
        c1 = _causal_k3(features) @ self.enc_conv1.T
        cat = torch.cat([emb, c1], dim=2)
        cond = torch.nn.functional.leaky_relu(
            _causal_k3(cat) @ self.enc_conv2.T, 0.2
        )
        x = cond
        outs = []
        for gru, glu in zip(self.grus, self.gru_glus):
            x = glu(gru(x))
            outs.append(x)
        lat = self.proj_glu(self.proj_fc(torch.cat(outs + [cond], dim=2)))

        zero = torch.zeros_like(lat[:, :1])
        padded = torch.cat([zero, lat, zero], dim=1)
        u = self.fw_glus[0](
            self.fw_fcs[0](
                torch.cat([padded[:, :-2], padded[:, 1:-1], padded[:, 2:]], dim=2)
            )
        )
        for fc, glu in zip(self.fw_fcs[1:], self.fw_glus[1:]):
            prev = torch.cat([torch.zeros_like(u[:, :1]), u[:, :-1]], dim=1)
            u = glu(fc(torch.cat([prev, u, lat], dim=2)))
        frames = self.output_fc(u)
        b, n, _ = frames.shape
        return frames.reshape(b, n * self.cfg.frame_out)

    def export_tensors(self):
        """Effective dense matrices keyed by the engine's tensor names."""
        out = {"pitch_embedding": self.pitch_embedding}
        out["enc_conv1"] = self.enc_conv1
        out["enc_conv2"] = self.enc_conv2
        for g, (gru, glu) in enumerate(zip(self.grus, self.gru_glus)):
            for gate in ("update", "reset", "candidate"):
                out[f"gru{g}_w_{gate}"] = getattr(gru, f"w_{gate}")
                out[f"gru{g}_u_{gate}"] = getattr(gru, f"u_{gate}")
            out[f"gru{g}_glu_gate"] = glu.gate.weight()
        out["proj_fc"] = self.proj_fc.weight()
        out["proj_glu_gate"] = self.proj_glu.gate.weight()
        for i, (fc, glu) in enumerate(zip(self.fw_fcs, self.fw_glus)):
            out[f"fwconv{i}_fc"] = fc.weight()
            out[f"fwconv{i}_glu_gate"] = glu.gate.weight()
        out["output_fc"] = self.output_fc.weight()
        return {k: v.detach().cpu().numpy().astype("float32") for k, v in out.items()}
