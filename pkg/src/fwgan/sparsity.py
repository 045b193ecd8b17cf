"""Magnitude pruning to block-sparse weights and complexity accounting.

Pruning keeps the top-magnitude 16x1 blocks of each planned tensor (L1
block norm), with the diagonal blocks of recurrent matrices always kept.
FLOPS accounting follows C = N_active * 2 * S plus a fixed 7-FLOPS-per-call
convention for tanh/sigmoid evaluations.
"""

import platform
import sys
import threading
import time
from dataclasses import dataclass, field

import numpy as np

from .features import FeatureFrame
from .report import ComplexityReport, LayerReport
from .tensor_core import BLOCK_SHAPE_DEFAULT, BlockSparseMatrix, DenseMatrix
from .weights_io import ModelWeights

ACTIVATION_FLOPS = 7  # per tanh/sigmoid evaluation, accounting convention

# The paper plan: GRU matrices at 0.6, fully-connected layers at 0.65,
# except the last three (final two conditional framewise layers + output),
# which stay dense. Encoder convolutions and the embedding are not
# fully-connected layers and stay dense too.
GRU_DENSITY = 0.6
FC_DENSITY = 0.65


def _is_gru_matrix(name):
    return name.startswith("gru") and ("_w_" in name or "_u_" in name)


def _is_recurrent(name):
    return name.startswith("gru") and "_u_" in name


def _is_fc(name):
    return (
        name.endswith("_glu_gate")
        or name.endswith("_fc")
        or name in ("proj_fc", "output_fc")
    )


def paper_density_plan(weights, n_conditional=None):
    """Density plan for the reference sparsification of a generator model."""
    if n_conditional is None:
        n_conditional = 0
        while f"fwconv{n_conditional + 1}_fc" in weights:
            n_conditional += 1
    last_dense = {
        f"fwconv{n_conditional - 1}_fc",
        f"fwconv{n_conditional - 1}_glu_gate",
        f"fwconv{n_conditional}_fc",
        f"fwconv{n_conditional}_glu_gate",
        "output_fc",
    }
    plan = {}
    for name in weights.names():
        if name in last_dense:
            continue
        if _is_gru_matrix(name):
            plan[name] = GRU_DENSITY
        elif _is_fc(name):
            plan[name] = FC_DENSITY
    return plan


def _diagonal_blocks(rows, cols, block_shape):
    """Boolean grid marking blocks the main diagonal passes through."""
    bh, bw = block_shape
    grid = np.zeros((rows // bh, cols // bw), dtype=bool)
    for j in range(min(rows, cols)):
        grid[j // bh, j // bw] = True
    return grid


def prune_matrix(matrix, density, block_shape=BLOCK_SHAPE_DEFAULT, keep_diagonal=False):
    """Keep the top-ceil(density * blocks) blocks by L1 magnitude.

    Kept weights are unchanged; dropped blocks become exactly zero. With
    keep_diagonal the diagonal blocks are selected first and the remaining
    budget filled with the largest off-diagonal blocks.
    """
    if not 0.0 < density <= 1.0:
        raise ValueError(f"density {density} out of (0, 1]")
    data = matrix.data if isinstance(matrix, DenseMatrix) else matrix.to_dense()
    rows, cols = data.shape
    bh, bw = block_shape
    if rows % bh or cols % bw:
        raise ValueError(f"{rows}x{cols} not divisible by block {block_shape}")
    grid = (rows // bh, cols // bw)
    norms = (
        np.abs(data).reshape(grid[0], bh, grid[1], bw).sum(axis=(1, 3))
    )
    n_total = grid[0] * grid[1]
    n_keep = int(np.ceil(density * n_total))
    mask = np.zeros(grid, dtype=bool)
    if keep_diagonal:
        mask |= _diagonal_blocks(rows, cols, block_shape)
    budget = n_keep - int(mask.sum())
    if budget > 0:
        flat = norms.copy()
        flat[mask] = -np.inf  # already kept
        order = np.argsort(flat, axis=None)[::-1][:budget]
        mask.reshape(-1)[order] = True
    return BlockSparseMatrix.from_dense(data, mask, block_shape)


def prune(weights, plan, block_shape=BLOCK_SHAPE_DEFAULT):
    """Apply a name -> density plan; tensors absent from the plan (or at
    density 1.0) pass through unchanged. Recurrent GRU matrices keep their
    diagonal blocks unconditionally."""
    unknown = set(plan) - set(weights.tensors)
    if unknown:
        raise ValueError(f"plan names unknown tensors: {sorted(unknown)}")
    out = {}
    for name, tensor in weights.tensors.items():
        density = plan.get(name)
        if density is None or density == 1.0:
            out[name] = tensor
        else:
            out[name] = prune_matrix(
                tensor, density, block_shape, keep_diagonal=_is_recurrent(name)
            )
    return ModelWeights(out)


def _activation_evals_per_step(weights):
    """tanh/sigmoid evaluations per generation step, inferred from tensor
    names: 3h per GRU (z, r sigmoids + candidate tanh), one sigmoid per GLU
    gate output."""
    evals = 0
    for name in weights.names():
        t = weights[name]
        if name.startswith("gru") and "_u_update" in name:
            evals += 3 * t.rows
        elif name.endswith("_glu_gate"):
            evals += t.rows
    return evals


def count_flops(weights, steps_per_second=100):
    """ComplexityReport for a model: matrix cost N_active*2*S, itemized per
    layer, plus the activation-function budget."""
    layers = []
    for name in weights.names():
        t = weights[name]
        layers.append(
            LayerReport(
                name=name,
                shape=(t.rows, t.cols),
                params_total=t.n_params,
                params_active=t.n_active,
                flops=t.n_active * 2 * steps_per_second,
            )
        )
    return ComplexityReport(
        layers=layers,
        steps_per_second=steps_per_second,
        activation_evals_per_step=_activation_evals_per_step(weights),
        activation_flops_per_eval=ACTIVATION_FLOPS,
    )


@dataclass
class RtfReport:
    audio_seconds: float
    threads: int
    runs: int
    rtf_median: float
    rtf_runs: list = field(default_factory=list)
    machine: str = ""

    def as_text(self):
        lines = [
            f"audio duration : {self.audio_seconds:.1f} s",
            f"threads        : {self.threads}",
            f"runs           : {self.runs}",
            f"RTF per run    : {', '.join(f'{r:.4f}' for r in self.rtf_runs)}",
            f"RTF (median)   : {self.rtf_median:.4f}"
            + (" (faster than real time)" if self.rtf_median < 1 else ""),
            f"machine        : {self.machine}",
        ]
        return "\n".join(lines)

    def as_keyvalues(self):
        lines = [
            f"audio_seconds={self.audio_seconds}",
            f"threads={self.threads}",
            f"runs={self.runs}",
            f"rtf_median={self.rtf_median}",
            f"machine={self.machine}",
        ]
        for i, r in enumerate(self.rtf_runs):
            lines.append(f"rtf_run_{i}={r}")
        return "\n".join(lines)


def synthetic_features(seconds, seed=0):
    """Random but plausible feature frames for benchmarking."""
    rng = np.random.default_rng(seed)
    n = int(round(seconds * 100))
    frames = []
    for i in range(n):
        coeffs = rng.normal(0.0, 1.0, size=18) * np.exp(-0.2 * np.arange(18))
        period = int(rng.integers(40, 280))
        corr = float(rng.uniform(0.0, 1.0))
        frames.append(FeatureFrame(coeffs, period, corr, frame_index=i))
    return frames


def bench_rtf(weights, seconds, threads=1, runs=5, cfg=None):
    """Wall-clock real-time factor of streaming synthesis.

    Median over `runs` timed passes after one warm-up pass; with threads > 1
    each thread drives its own engine and the reported RTF is the slowest
    per-thread median (all streams must keep up for real-time operation).
    """
    from .generator import StreamingSynthesizer, infer_config

    if seconds <= 0:
        raise ValueError("seconds must be positive")
    cfg = cfg or infer_config(weights)
    frames = synthetic_features(seconds)

    def one_pass():
        engine = StreamingSynthesizer(weights, cfg)
        for f in frames:
            engine.push(f)
        engine.flush()

    def timed_runs():
        one_pass()  # warm-up
        times = []
        for _ in range(runs):
            t0 = time.perf_counter()
            one_pass()
            times.append(time.perf_counter() - t0)
        return [t / seconds for t in times]

    if threads <= 1:
        rtfs = timed_runs()
    else:
        results = [None] * threads
        def worker(i):
            results[i] = timed_runs()
        workers = [threading.Thread(target=worker, args=(i,)) for i in range(threads)]
        for w in workers:
            w.start()
        for w in workers:
            w.join()
        rtfs = max(results, key=lambda r: float(np.median(r)))

    machine = (
        f"{platform.platform()}; {platform.processor() or platform.machine()}; "
        f"python {sys.version.split()[0]}; numpy {np.__version__}"
    )
    return RtfReport(
        audio_seconds=float(seconds),
        threads=threads,
        runs=runs,
        rtf_median=float(np.median(rtfs)),
        rtf_runs=[float(r) for r in rtfs],
        machine=machine,
    )
