"""Round trip: WAV -> features -> synthesized WAV.

Runs the full chain with a random (untrained) tiny model, so the output is
noise-like -- the point is the plumbing: feature extraction, the weight
file format, and both synthesis paths agreeing bit for bit.
"""

import tempfile
from pathlib import Path

import numpy as np

from fwgan.features import SignalBuffer, analyze, read_wav, write_wav
from fwgan.generator import (
    GeneratorConfig,
    random_model,
    synthesize_offline,
    synthesize_streaming,
    synthesize_to_speech,
)
from fwgan.weights_io import load_model, save_model

workdir = Path(tempfile.mkdtemp(prefix="fwgan_demo_"))

# one second of a 150 Hz sawtooth as stand-in speech
t = np.arange(16000) / 16000.0
speech = SignalBuffer(0.5 * (2.0 * ((150.0 * t) % 1.0) - 1.0))
write_wav(workdir / "input.wav", speech)

frames = analyze(read_wav(workdir / "input.wav"))
print(f"extracted {len(frames)} feature frames (100 per second)")
print(f"first frame: period={frames[0].pitch_period} samples, "
      f"corr={frames[0].pitch_correlation:.3f}")

cfg = GeneratorConfig.tiny()
model = random_model(cfg, seed=0)
save_model(model, workdir / "model.fwgn")
model = load_model(workdir / "model.fwgn")  # format round trip

offline = synthesize_offline(frames, model, cfg)
streaming = synthesize_streaming(frames, model, cfg)
print(f"offline and streaming outputs identical: "
      f"{np.array_equal(offline.samples, streaming.samples)}")

out, clipped = synthesize_to_speech(frames, model, cfg)
write_wav(workdir / "output.wav", out)
print(f"wrote {len(out)} samples to {workdir / 'output.wav'} "
      f"({clipped} clipped)")
