
import numpy as np
import pytest

from helpers import random_features
from fwgan.features import DOMAIN_NATURAL, DOMAIN_PERCEPTUAL, FeatureFrame
from fwgan.generator import (
    AuditError,
    GeneratorConfig,
    GeneratorState,
    StreamingSynthesizer,
    _Params,
    audit_shapes,
    encode_conditioning,
    framewise_conv,
    infer_config,
    random_model,
    synthesize_offline,
    synthesize_streaming,
    synthesize_to_speech,
    tensor_specs,
    zero_model,
)
from fwgan.features import quantize_period
from fwgan.tensor_core import DenseMatrix, sigmoid
from fwgan.weights_io import ModelWeights


class TestConfig:
    def test_reference_dense_total_near_7p8m(self):
        cfg = GeneratorConfig.reference()
        total = sum(r * c for r, c in tensor_specs(cfg).values())
        assert abs(total - 7.8e6) / 7.8e6 < 0.05

    def test_fc_input_widths(self):
        cfg = GeneratorConfig.reference()
        specs = tensor_specs(cfg)
        assert specs["fwconv0_fc"] == (512, 3 * 512)  # kernel 3 -> 1536
        for i in range(1, cfg.fwconv_conditional_count + 1):
            # kernel 2 + one conditioning frame -> same 1536 width
            assert specs[f"fwconv{i}_fc"] == (512, 2 * 512 + 512)

    def test_cond_dim_consistency_enforced(self):
        with pytest.raises(ValueError, match="cond_dim"):
            GeneratorConfig(cond_dim=100)


class TestAudit:
    def test_reference_config_passes(self):
        cfg = GeneratorConfig.tiny()
        report = audit_shapes(zero_model(cfg), cfg)
        assert report.params_total == sum(
            r * c for r, c in tensor_specs(cfg).values()
        )

    def test_high_complexity_variant_passes_its_own_audit(self):
        cfg = GeneratorConfig.high_complexity()
        assert cfg.gru_hidden == 320
        assert cfg.fwconv_conditional_count == 10
        audit_shapes(zero_model(cfg), cfg)

    def test_latent_mismatch_fails_at_fwconv0(self):
        cfg = GeneratorConfig.tiny()
        w = zero_model(cfg)
        bad = dict(w.tensors)
        bad["fwconv0_fc"] = DenseMatrix(
            np.zeros((cfg.latent_dim, 3 * cfg.latent_dim - 1))
        )
        with pytest.raises(AuditError, match="fwconv0_fc"):
            audit_shapes(ModelWeights(bad), cfg)

    def test_missing_tensor(self):
        cfg = GeneratorConfig.tiny()
        w = zero_model(cfg)
        del w.tensors["output_fc"]
        with pytest.raises(AuditError, match="missing"):
            audit_shapes(w, cfg)

    def test_extra_tensor(self):
        cfg = GeneratorConfig.tiny()
        w = zero_model(cfg)
        w.tensors["stray"] = DenseMatrix(np.zeros((2, 2)))
        with pytest.raises(AuditError, match="unexpected"):
            audit_shapes(w, cfg)

    def test_infer_config_round_trip(self):
        for cfg in (GeneratorConfig.tiny(), GeneratorConfig.tiny(gru_hidden=6)):
            assert infer_config(zero_model(cfg)) == cfg


class TestEncoder:
    def test_zero_weights_zero_conditioning(self, tiny_cfg):
        params = _Params(zero_model(tiny_cfg), tiny_cfg)
        state = GeneratorState(tiny_cfg)
        f = random_features(1)[0]
        cond = encode_conditioning(params, f, state)
        assert np.all(cond == 0.0)

    def test_first_frame_matches_explicit_zero_padding(self, tiny_cfg, tiny_model):
        params = _Params(tiny_model, tiny_cfg)
        state = GeneratorState(tiny_cfg)
        f = random_features(1, seed=3)[0]
        got = encode_conditioning(params, f, state)
        # oracle: same computation with explicit zero history
        want = conditioning_oracle(tiny_model, tiny_cfg, [f])[0]
        assert np.array_equal(got, want)

    def test_streaming_matches_offline_convolution_oracle(self, tiny_cfg, tiny_model):
        params = _Params(tiny_model, tiny_cfg)
        state = GeneratorState(tiny_cfg)
        frames = random_features(3, seed=4)
        got = [encode_conditioning(params, f, state) for f in frames]
        want = conditioning_oracle(tiny_model, tiny_cfg, frames)
        for g, w in zip(got, want):
            assert np.array_equal(g, w)


def conditioning_oracle(weights, cfg, frames):
    """Non-streaming causal convolution over the zero-padded sequence."""
    emb = weights["pitch_embedding"].data
    c1w = weights["enc_conv1"].data
    c2w = weights["enc_conv2"].data
    fvecs = [
        np.concatenate([f.bfcc, [np.float32(f.pitch_correlation)]]).astype(np.float32)
        for f in frames
    ]
    padded = [np.zeros(cfg.feature_dim, np.float32)] * 2 + fvecs
    cats = []
    for i, f in enumerate(frames):
        x = np.concatenate(padded[i : i + 3])
        c1 = c1w @ x
        cats.append(
            np.concatenate([emb[quantize_period(f.pitch_period)], c1]).astype(
                np.float32
            )
        )
    padded2 = [np.zeros(cfg.cond_dim, np.float32)] * 2 + cats
    out = []
    for i in range(len(frames)):
        x = np.concatenate(padded2[i : i + 3])
        c2 = c2w @ x
        out.append(np.where(c2 >= 0, c2, 0.2 * c2).astype(np.float32))
    return out


class TestFramewiseConv:
    def test_zero_inputs_zero_output(self, tiny_cfg, tiny_model):
        params = _Params(tiny_model, tiny_cfg)
        zero = np.zeros(tiny_cfg.latent_dim, np.float32)
        out = framewise_conv(params.fw_fc[0], params.fw_gate[0], [zero, zero, zero])
        assert np.all(out == 0.0)
        out = framewise_conv(
            params.fw_fc[1], params.fw_gate[1], [zero, zero], cond=zero
        )
        assert np.all(out == 0.0)

    def test_matches_manual_glu(self, tiny_cfg, tiny_model):
        rng = np.random.default_rng(0)
        params = _Params(tiny_model, tiny_cfg)
        d = tiny_cfg.latent_dim
        frames = [rng.normal(size=d).astype(np.float32) for _ in range(3)]
        got = framewise_conv(params.fw_fc[0], params.fw_gate[0], frames)
        x = np.concatenate(frames)
        pre = params.fw_fc[0].data @ x
        want = pre * sigmoid(params.fw_gate[0].data @ pre)
        assert np.allclose(got, want, atol=1e-6)

    def test_wrong_frame_count(self, tiny_cfg, tiny_model):
        params = _Params(tiny_model, tiny_cfg)
        zero = np.zeros(tiny_cfg.latent_dim, np.float32)
        with pytest.raises(ValueError):
            framewise_conv(params.fw_fc[0], params.fw_gate[0], [zero, zero])


class TestSynthesis:
    def test_100_frames_give_16000_samples(self, tiny_cfg, tiny_model):
        sig = synthesize_offline(random_features(100), tiny_model, tiny_cfg)
        assert len(sig) == 16000
        assert sig.domain == DOMAIN_PERCEPTUAL

    def test_single_frame_gives_160_samples(self, tiny_cfg, tiny_model):
        sig = synthesize_offline(random_features(1), tiny_model, tiny_cfg)
        assert len(sig) == 160

    def test_output_length_always_160_per_frame(self, tiny_cfg, tiny_model):
        for n in (1, 2, 5, 17):
            sig = synthesize_offline(random_features(n), tiny_model, tiny_cfg)
            assert len(sig) == 160 * n

    def test_empty_features_rejected(self, tiny_cfg, tiny_model):
        with pytest.raises(ValueError):
            synthesize_offline([], tiny_model, tiny_cfg)

    def test_deterministic(self, tiny_cfg, tiny_model):
        frames = random_features(10, seed=9)
        a = synthesize_offline(frames, tiny_model, tiny_cfg)
        b = synthesize_offline(frames, tiny_model, tiny_cfg)
        assert np.array_equal(a.samples, b.samples)

    def test_zero_weights_zero_speech(self, tiny_cfg):
        w = zero_model(tiny_cfg)
        sig, clipped = synthesize_to_speech(random_features(5), w, tiny_cfg)
        assert sig.domain == DOMAIN_NATURAL
        assert np.all(sig.samples == 0.0)
        assert clipped == 0

    def test_to_speech_lengths(self, tiny_cfg, tiny_model):
        sig, _ = synthesize_to_speech(random_features(100), tiny_model, tiny_cfg)
        assert len(sig) == 16000
        assert np.all(np.abs(sig.samples) <= 1.0)
        assert np.all(np.isfinite(sig.samples))


class TestStreaming:
    def test_first_push_buffers(self, tiny_cfg, tiny_model):
        engine = StreamingSynthesizer(tiny_model, tiny_cfg)
        frames = random_features(2)
        assert engine.push(frames[0]) is None
        out = engine.push(frames[1])
        assert out is not None and out.shape == (tiny_cfg.frame_out,)

    def test_frame_conservation(self, tiny_cfg, tiny_model):
        for n in (1, 3, 8):
            engine = StreamingSynthesizer(tiny_model, tiny_cfg)
            got = [engine.push(f) for f in random_features(n)]
            emitted = sum(1 for g in got if g is not None)
            if engine.flush() is not None:
                emitted += 1
            assert emitted == n

    def test_push_after_flush_rejected(self, tiny_cfg, tiny_model):
        engine = StreamingSynthesizer(tiny_model, tiny_cfg)
        engine.push(random_features(1)[0])
        engine.flush()
        with pytest.raises(RuntimeError, match="push after flush"):
            engine.push(random_features(1)[0])

    def test_streaming_equals_offline_bit_identically(self):
        for seed in range(10):
            cfg = GeneratorConfig.tiny()
            w = random_model(cfg, seed=seed)
            frames = random_features(6, seed=seed + 100)
            off = synthesize_offline(frames, w, cfg)
            stream = synthesize_streaming(frames, w, cfg)
            assert np.array_equal(off.samples, stream.samples)

    def test_flush_without_push(self, tiny_cfg, tiny_model):
        engine = StreamingSynthesizer(tiny_model, tiny_cfg)
        assert engine.flush() is None


class TestDelayBudget:
    def test_frame_depends_only_on_features_up_to_i_plus_1(self, tiny_cfg):
        w = random_model(tiny_cfg, seed=21)
        frames = random_features(6, seed=5)
        base = synthesize_offline(frames, w, tiny_cfg).samples
        i = 2
        lo, hi = i * 160, (i + 1) * 160

        def perturbed(j):
            alt = list(frames)
            alt[j] = FeatureFrame(
                frames[j].bfcc + 1.0,
                frames[j].pitch_period,
                frames[j].pitch_correlation,
                frames[j].frame_index,
            )
            return synthesize_offline(alt, w, tiny_cfg).samples

        # changing feature i+2 leaves frame i untouched
        assert np.array_equal(perturbed(i + 2)[lo:hi], base[lo:hi])
        # changing feature i+1 changes frame i for generic weights
        assert not np.array_equal(perturbed(i + 1)[lo:hi], base[lo:hi])


class TestLinearityProbe:
    def test_zero_gates_make_feature_path_linear(self, tiny_cfg):
        # zero every GLU gate and the GRU weights: the conditioning ->
        # projection pre-gate path is then linear, so doubling the
        # conditioning features doubles the projection input
        w = random_model(tiny_cfg, seed=2)
        for name in list(w.tensors):
            if name.endswith("_glu_gate") or name.startswith("gru"):
                w.tensors[name] = DenseMatrix(
                    np.zeros((w[name].rows, w[name].cols), np.float32)
                )
        params = _Params(w, tiny_cfg)
        base = random_features(1, seed=6)[0]
        f = FeatureFrame(base.bfcc, base.pitch_period, 0.0)
        st1, st2 = GeneratorState(tiny_cfg), GeneratorState(tiny_cfg)
        cond = encode_conditioning(params, f, st1)
        f2 = FeatureFrame(f.bfcc * 2.0, f.pitch_period, 0.0)
        # leaky_relu breaks scaling unless inputs stay positive; probe the
        # pre-activation of the second conv instead via the doubled path
        cond2 = encode_conditioning(params, f2, st2)
        # pitch embedding is index-based (not scaled); remove its additive
        # contribution by comparing against the embedding-only response
        st3 = GeneratorState(tiny_cfg)
        f0 = FeatureFrame(np.zeros(18, np.float32), f.pitch_period, 0.0)
        cond0 = encode_conditioning(params, f0, st3)
        lin1 = cond - cond0
        lin2 = cond2 - cond0
        mask = (cond > 0) & (cond2 > 0) & (cond0 > 0)
        assert np.allclose(lin2[mask], 2.0 * lin1[mask], rtol=1e-4, atol=1e-5)
