"""Framewise waveform generator.

One network step per 10 ms feature frame: the conditioning encoder (pitch
embedding + two causal frame-convolutions) feeds a stack of 5 bias-free
GRUs; all GRU outputs plus the conditioning vector are projected to a
latent frame; a framewise-convolution stack (one non-causal kernel-3 layer,
then causal kernel-2 layers conditioned on the same latent) maps latents to
a 160-sample waveform frame. Flattening the frames yields the signal in the
perceptual domain.

Two synthesis paths are provided: an offline one over explicitly padded
arrays and a streaming engine with one frame of algorithmic latency. They
perform the same float32 operations in the same order, so their outputs are
bit-identical; the test suite enforces this.
"""

from dataclasses import dataclass

import numpy as np

from .features import DOMAIN_PERCEPTUAL, SignalBuffer, quantize_period
from .perceptual import lpc_from_bfcc, inverse_weighting
from .features import de_emphasis
from .report import ComplexityReport, LayerReport
from .tensor_core import (
    DenseMatrix,
    GruParams,
    activation,
    gemv,
    glu,
    gru_step,
)
from .weights_io import ModelWeights


class AuditError(ValueError):
    """A tensor is missing, unexpected, or has the wrong shape."""


@dataclass(frozen=True)
class GeneratorConfig:
    cond_dim: int = 256
    gru_count: int = 5
    gru_hidden: int = 192  # tuned so the dense total lands on 7.8 M params
    latent_dim: int = 512
    fwconv_noncausal_kernel: int = 3
    fwconv_conditional_count: int = 4
    fwconv_conditional_kernel: int = 2
    frame_out: int = 160
    feature_dim: int = 19  # 18 BFCC + pitch correlation
    pitch_levels: int = 256
    pitch_embed_dim: int = 128
    enc_conv1_out: int = 128
    enc_kernel: int = 3

    def __post_init__(self):
        if self.pitch_embed_dim + self.enc_conv1_out != self.cond_dim:
            raise ValueError("cond_dim must equal pitch_embed_dim + enc_conv1_out")
        if self.fwconv_noncausal_kernel != 3 or self.fwconv_conditional_kernel != 2:
            raise ValueError("framewise kernels are fixed at 3 (non-causal) and 2")

    @classmethod
    def reference(cls):
        return cls()

    @classmethod
    def high_complexity(cls):
        """The 3-GFLOPS variant: GRU size 320, 10 conditional layers."""
        return cls(gru_hidden=320, fwconv_conditional_count=10)

    @classmethod
    def tiny(cls, gru_hidden=4, latent_dim=8, cond_dim=8, gru_count=2,
             fwconv_conditional_count=2):
        """Small configuration for property tests."""
        return cls(
            cond_dim=cond_dim,
            gru_count=gru_count,
            gru_hidden=gru_hidden,
            latent_dim=latent_dim,
            fwconv_conditional_count=fwconv_conditional_count,
            pitch_embed_dim=cond_dim // 2,
            enc_conv1_out=cond_dim - cond_dim // 2,
        )


def tensor_specs(cfg):
    """Expected tensor name -> (rows, cols) map for a configuration."""
    k = cfg.enc_kernel
    specs = {
        "pitch_embedding": (cfg.pitch_levels, cfg.pitch_embed_dim),
        "enc_conv1": (cfg.enc_conv1_out, cfg.feature_dim * k),
        "enc_conv2": (cfg.cond_dim, cfg.cond_dim * k),
    }
    in_dim = cfg.cond_dim
    for g in range(cfg.gru_count):
        h = cfg.gru_hidden
        for gate in ("update", "reset", "candidate"):
            specs[f"gru{g}_w_{gate}"] = (h, in_dim)
            specs[f"gru{g}_u_{gate}"] = (h, h)
        specs[f"gru{g}_glu_gate"] = (h, h)
        in_dim = h
    concat_dim = cfg.gru_count * cfg.gru_hidden + cfg.cond_dim
    specs["proj_fc"] = (cfg.latent_dim, concat_dim)
    specs["proj_glu_gate"] = (cfg.latent_dim, cfg.latent_dim)
    specs["fwconv0_fc"] = (cfg.latent_dim, 3 * cfg.latent_dim)
    specs["fwconv0_glu_gate"] = (cfg.latent_dim, cfg.latent_dim)
    for i in range(1, cfg.fwconv_conditional_count + 1):
        specs[f"fwconv{i}_fc"] = (cfg.latent_dim, 3 * cfg.latent_dim)
        specs[f"fwconv{i}_glu_gate"] = (cfg.latent_dim, cfg.latent_dim)
    specs["output_fc"] = (cfg.frame_out, cfg.latent_dim)
    return specs


def audit_shapes(weights, cfg):
    """Verify every tensor exists with the configured shape; returns a
    ComplexityReport whose layer list carries per-tensor parameter counts.
    Raises AuditError on the first mismatch."""
    specs = tensor_specs(cfg)
    for name in sorted(specs):
        if name not in weights:
            raise AuditError(f"missing tensor {name!r}")
        t = weights[name]
        shape = (t.rows, t.cols)
        if shape != specs[name]:
            raise AuditError(
                f"tensor {name!r}: expected shape {specs[name]}, got {shape}"
            )
    extra = set(weights.tensors) - set(specs)
    if extra:
        raise AuditError(f"unexpected tensors: {sorted(extra)}")
    layers = [
        LayerReport(
            name=name,
            shape=specs[name],
            params_total=weights[name].n_params,
            params_active=weights[name].n_active,
        )
        for name in sorted(specs)
    ]
    return ComplexityReport(layers=layers)


def random_model(cfg, seed=0):
    """Gaussian-initialized dense model (std 1/sqrt(fan_in))."""
    rng = np.random.default_rng(seed)
    tensors = {}
    for name, (rows, cols) in tensor_specs(cfg).items():
        std = 1.0 / np.sqrt(cols)
        tensors[name] = DenseMatrix(rng.normal(0.0, std, size=(rows, cols)))
    return ModelWeights(tensors)


def zero_model(cfg):
    tensors = {
        name: DenseMatrix(np.zeros(shape, dtype=np.float32))
        for name, shape in tensor_specs(cfg).items()
    }
    return ModelWeights(tensors)


def infer_config(weights):
    """Recover the GeneratorConfig from tensor shapes (the weight file
    carries no explicit configuration)."""
    try:
        embed = weights["pitch_embedding"]
        enc1 = weights["enc_conv1"]
        enc2 = weights["enc_conv2"]
        proj = weights["proj_fc"]
        out = weights["output_fc"]
        hidden = weights["gru0_u_update"]
    except KeyError as exc:
        raise AuditError(f"missing tensor {exc.args[0]!r}") from None

    def shape(t):
        return (t.rows, t.cols)

    gru_count = 0
    while f"gru{gru_count}_u_update" in weights:
        gru_count += 1
    cond_count = 0
    while f"fwconv{cond_count + 1}_fc" in weights:
        cond_count += 1
    cfg = GeneratorConfig(
        cond_dim=shape(enc2)[0],
        gru_count=gru_count,
        gru_hidden=shape(hidden)[0],
        latent_dim=shape(proj)[0],
        fwconv_conditional_count=cond_count,
        frame_out=shape(out)[0],
        feature_dim=shape(enc1)[1] // 3,
        pitch_levels=shape(embed)[0],
        pitch_embed_dim=shape(embed)[1],
        enc_conv1_out=shape(enc1)[0],
    )
    audit_shapes(weights, cfg)
    return cfg


@dataclass
class GeneratorState:
    """All recurrences and framewise-convolution histories for streaming."""

    cfg: GeneratorConfig
    enc1_hist: np.ndarray = None  # (kernel-1, feature_dim) previous frames
    enc2_hist: np.ndarray = None  # (kernel-1, cond_dim)
    gru_h: list = None
    lat_prev: np.ndarray = None  # latent j-1 for the pending output frame
    lat_cur: np.ndarray = None  # latent j (pending); None until first push
    fw_hist: list = None  # per conditional layer: its input frame at j-1

    def __post_init__(self):
        self.reset()

    def reset(self):
        cfg = self.cfg
        k = cfg.enc_kernel - 1
        self.enc1_hist = np.zeros((k, cfg.feature_dim), dtype=np.float32)
        self.enc2_hist = np.zeros((k, cfg.cond_dim), dtype=np.float32)
        self.gru_h = [
            np.zeros(cfg.gru_hidden, dtype=np.float32) for _ in range(cfg.gru_count)
        ]
        self.lat_prev = np.zeros(cfg.latent_dim, dtype=np.float32)
        self.lat_cur = None
        self.fw_hist = [
            np.zeros(cfg.latent_dim, dtype=np.float32)
            for _ in range(cfg.fwconv_conditional_count)
        ]


class _Params:
    """ModelWeights unpacked into the structures the compute path uses."""

    def __init__(self, weights, cfg):
        audit_shapes(weights, cfg)
        self.cfg = cfg
        t = weights.tensors
        self.embedding = t["pitch_embedding"]
        self.enc_conv1 = t["enc_conv1"]
        self.enc_conv2 = t["enc_conv2"]
        self.grus = [
            GruParams(
                t[f"gru{g}_w_update"],
                t[f"gru{g}_w_reset"],
                t[f"gru{g}_w_candidate"],
                t[f"gru{g}_u_update"],
                t[f"gru{g}_u_reset"],
                t[f"gru{g}_u_candidate"],
            )
            for g in range(cfg.gru_count)
        ]
        self.gru_gates = [t[f"gru{g}_glu_gate"] for g in range(cfg.gru_count)]
        self.proj_fc = t["proj_fc"]
        self.proj_gate = t["proj_glu_gate"]
        self.fw_fc = [
            t[f"fwconv{i}_fc"] for i in range(cfg.fwconv_conditional_count + 1)
        ]
        self.fw_gate = [
            t[f"fwconv{i}_glu_gate"]
            for i in range(cfg.fwconv_conditional_count + 1)
        ]
        self.output_fc = t["output_fc"]


def _feature_vector(frame, cfg):
    vec = np.empty(cfg.feature_dim, dtype=np.float32)
    vec[:18] = frame.bfcc
    vec[18] = frame.pitch_correlation
    return vec


def framewise_conv(fc, gate, inputs, cond=None):
    """One framewise-convolution step: GLU(FC(concat(inputs [, cond]))).

    `inputs` are the k kernel frames ordered oldest first; `cond` is the
    extra conditioning frame of a conditional layer.
    """
    parts = list(inputs) + ([cond] if cond is not None else [])
    x = np.concatenate(parts).astype(np.float32)
    return glu(gemv(fc, x), gate)


def encode_conditioning(params, frame, state):
    """Conditioning vector for one feature frame, updating encoder state."""
    cfg = params.cfg
    idx = quantize_period(frame.pitch_period)
    if not 0 <= idx < cfg.pitch_levels:
        raise ValueError(f"pitch embedding index {idx} out of [0, {cfg.pitch_levels})")
    fvec = _feature_vector(frame, cfg)
    x1 = np.concatenate([state.enc1_hist.reshape(-1), fvec])
    c1 = gemv(params.enc_conv1, x1)
    state.enc1_hist = np.vstack([state.enc1_hist[1:], fvec])
    emb_data = (
        params.embedding.data
        if isinstance(params.embedding, DenseMatrix)
        else params.embedding.to_dense()
    )
    cat = np.concatenate([emb_data[idx], c1]).astype(np.float32)
    x2 = np.concatenate([state.enc2_hist.reshape(-1), cat])
    c2 = gemv(params.enc_conv2, x2)
    state.enc2_hist = np.vstack([state.enc2_hist[1:], cat])
    return activation("leaky_relu", c2).astype(np.float32)


def _latent_step(params, frame, state):
    """cond -> GRU stack -> projection latent for one frame."""
    cond = encode_conditioning(params, frame, state)
    inp = cond
    outs = []
    for g in range(params.cfg.gru_count):
        h = gru_step(params.grus[g], state.gru_h[g], inp)
        state.gru_h[g] = h
        out = glu(h, params.gru_gates[g])
        outs.append(out)
        inp = out
    z = np.concatenate(outs + [cond]).astype(np.float32)
    return glu(gemv(params.proj_fc, z), params.proj_gate)


def _frame_step(params, lat_prev, lat_cur, lat_next, fw_hist):
    """Framewise stack + output FC for one frame; fw_hist updated in place."""
    u = framewise_conv(
        params.fw_fc[0], params.fw_gate[0], [lat_prev, lat_cur, lat_next]
    )
    for i in range(params.cfg.fwconv_conditional_count):
        nxt = framewise_conv(
            params.fw_fc[i + 1], params.fw_gate[i + 1], [fw_hist[i], u], cond=lat_cur
        )
        fw_hist[i] = u
        u = nxt
    return gemv(params.output_fc, u)


class StreamingSynthesizer:
    """Push-one-frame-in, get-one-frame-out engine.

    The first push buffers (the network needs one look-ahead latent), every
    later push emits the frame for the previous feature, and flush() emits
    the final frame with a zero look-ahead latent. Total algorithmic latency
    is therefore exactly one feature frame (10 ms).
    """

    def __init__(self, weights, cfg=None):
        cfg = cfg or infer_config(weights)
        self.params = _Params(weights, cfg)
        self.cfg = cfg
        self.state = GeneratorState(cfg)
        self._flushed = False

    def push(self, frame):
        if self._flushed:
            raise RuntimeError("push after flush")
        st = self.state
        lat = _latent_step(self.params, frame, st)
        if st.lat_cur is None:
            st.lat_cur = lat
            return None
        out = _frame_step(self.params, st.lat_prev, st.lat_cur, lat, st.fw_hist)
        st.lat_prev, st.lat_cur = st.lat_cur, lat
        return out

    def flush(self):
        if self._flushed:
            raise RuntimeError("flush called twice")
        self._flushed = True
        st = self.state
        if st.lat_cur is None:
            return None
        zero = np.zeros(self.cfg.latent_dim, dtype=np.float32)
        return _frame_step(self.params, st.lat_prev, st.lat_cur, zero, st.fw_hist)


def synthesize_offline(features, weights, cfg=None):
    """Whole-utterance synthesis over padded latent arrays.

    Output is the flattened perceptual-domain waveform, 160 samples per
    feature frame.
    """
    if not features:
        raise ValueError("need at least one feature frame")
    cfg = cfg or infer_config(weights)
    params = _Params(weights, cfg)
    state = GeneratorState(cfg)
    lats = [_latent_step(params, f, state) for f in features]
    zero = np.zeros(cfg.latent_dim, dtype=np.float32)
    padded = [zero] + lats + [zero]
    fw_hist = [
        np.zeros(cfg.latent_dim, dtype=np.float32)
        for _ in range(cfg.fwconv_conditional_count)
    ]
    frames = [
        _frame_step(params, padded[j], padded[j + 1], padded[j + 2], fw_hist)
        for j in range(len(features))
    ]
    samples = np.concatenate(frames).astype(np.float64)
    return SignalBuffer(samples, 16000, DOMAIN_PERCEPTUAL)


def synthesize_streaming(features, weights, cfg=None):
    """Full-utterance synthesis through the streaming engine; bit-identical
    to synthesize_offline."""
    if not features:
        raise ValueError("need at least one feature frame")
    engine = StreamingSynthesizer(weights, cfg)
    frames = [f for f in (engine.push(x) for x in features) if f is not None]
    last = engine.flush()
    if last is not None:
        frames.append(last)
    samples = np.concatenate(frames).astype(np.float64)
    return SignalBuffer(samples, 16000, DOMAIN_PERCEPTUAL)


def synthesize_to_speech(features, weights, cfg=None, streaming=False):
    """Full chain: generator -> inverse perceptual weighting (LPC re-derived
    from the input BFCCs) -> de-emphasis -> clamp to [-1, 1].

    Returns (natural-domain SignalBuffer, number of clipped samples).
    """
    synth = synthesize_streaming if streaming else synthesize_offline
    perceptual_sig = synth(features, weights, cfg)
    lpcs = [lpc_from_bfcc(f.bfcc.astype(np.float64)) for f in features]
    pre = inverse_weighting(perceptual_sig, lpcs)
    natural = de_emphasis(pre)
    clipped = int(np.sum(np.abs(natural.samples) > 1.0))
    natural.samples = np.clip(natural.samples, -1.0, 1.0)
    return natural, clipped
