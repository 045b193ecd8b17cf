"""Two-stage toy training: spectral pretraining, then adversarial
fine-tuning with least-squares objectives.

Both stages log a training-curve CSV and keep a rolling "last good"
checkpoint; a non-finite loss aborts the run and returns that checkpoint.
"""

import copy
import csv
from dataclasses import dataclass, field

import numpy as np
import torch

from .losses import DiscriminatorBank, l_aux, lsgan_d_loss, lsgan_g_loss
from .model import Generator, ToyConfig


@dataclass
class TrainConfig:
    steps: int = 500
    batch_size: int = 32
    window_frames: int = 24  # 240 ms crops
    lr_g: float = 1e-4
    lr_g_adversarial: float = 5e-5
    lr_d: float = 2e-4
    betas: tuple = (0.8, 0.99)
    snapshot_every: int = 25
    seed: int = 0
    curve_path: str = None  # optional CSV log


@dataclass
class TrainResult:
    model: Generator
    curve: list = field(default_factory=list)  # (step, *losses) rows
    diverged: bool = False

    def loss_column(self, idx=1):
        return [row[idx] for row in self.curve]


def _write_curve(path, header, rows):
    if path is None:
        return
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def _batch_tensors(dataset, cfg, rng):
    feats, pitch, target = dataset.sample_batch(
        cfg.batch_size, cfg.window_frames, rng
    )
    return (
        torch.from_numpy(feats),
        torch.from_numpy(pitch),
        torch.from_numpy(target),
    )


def pretrain(dataset, cfg=None, model_cfg=None):
    """Minimize the multi-resolution spectral loss against
    perceptual-domain targets. Returns the trained generator and its
    training curve; on divergence, the last snapshot."""
    cfg = cfg or TrainConfig()
    if dataset.seconds <= 0:
        raise ValueError("empty dataset")
    torch.manual_seed(cfg.seed)
    rng = np.random.default_rng(cfg.seed)
    model = Generator(model_cfg or ToyConfig())
    opt = torch.optim.AdamW(model.parameters(), lr=cfg.lr_g, betas=cfg.betas)
    snapshot = copy.deepcopy(model.state_dict())
    curve = []
    diverged = False
    for step in range(cfg.steps):
        feats, pitch, target = _batch_tensors(dataset, cfg, rng)
        pred = model(feats, pitch)
        loss = l_aux(target, pred)
        if not torch.isfinite(loss):
            diverged = True
            model.load_state_dict(snapshot)
            break
        opt.zero_grad()
        loss.backward()
        opt.step()
        curve.append((step, loss.item()))
        if (step + 1) % cfg.snapshot_every == 0:
            snapshot = copy.deepcopy(model.state_dict())
    _write_curve(cfg.curve_path, ["step", "l_aux"], curve)
    return TrainResult(model=model, curve=curve, diverged=diverged)


def adversarial_train(model, dataset, cfg=None, bank=None):
    """Alternating LSGAN updates on top of a pretrained generator; the
    generator objective keeps the spectral term as a regularizer."""
    cfg = cfg or TrainConfig()
    torch.manual_seed(cfg.seed + 1)
    rng = np.random.default_rng(cfg.seed + 1)
    bank = bank or DiscriminatorBank()
    opt_g = torch.optim.AdamW(
        model.parameters(), lr=cfg.lr_g_adversarial, betas=cfg.betas
    )
    opt_d = torch.optim.AdamW(bank.parameters(), lr=cfg.lr_d, betas=cfg.betas)
    snapshot = copy.deepcopy(model.state_dict())
    curve = []
    diverged = False
    for step in range(cfg.steps):
        feats, pitch, target = _batch_tensors(dataset, cfg, rng)

        fake = model(feats, pitch)
        d_loss = lsgan_d_loss(bank(target), bank(fake.detach()))
        opt_d.zero_grad()
        d_loss.backward()
        opt_d.step()

        aux = l_aux(target, fake)
        g_loss = lsgan_g_loss(bank(fake)) + aux
        if not (torch.isfinite(d_loss) and torch.isfinite(g_loss)):
            diverged = True
            model.load_state_dict(snapshot)
            break
        opt_g.zero_grad()
        g_loss.backward()
        opt_g.step()
        curve.append((step, g_loss.item(), d_loss.item(), aux.item()))
        if (step + 1) % cfg.snapshot_every == 0:
            snapshot = copy.deepcopy(model.state_dict())
    _write_curve(cfg.curve_path, ["step", "g_loss", "d_loss", "l_aux"], curve)
    return TrainResult(model=model, curve=curve, diverged=diverged)
