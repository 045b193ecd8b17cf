"""Batch command-line surface.

Exit codes: 0 success, 2 usage error (argparse), 3 missing/unreadable
input, 4 invalid file contents or validation failure, 5 processing error.
"""

import argparse
import json
import sys
import wave

from . import __version__
from .features import analyze, read_features, read_wav, write_features, write_wav
from .generator import AuditError, infer_config, synthesize_to_speech
from .losses import spectral_losses
from .metrics import format_metric_table, pmae, vde
from .sparsity import bench_rtf, count_flops, paper_density_plan, prune
from .weights_io import WeightFormatError, load_model, save_model

EXIT_OK = 0
EXIT_MISSING_INPUT = 3
EXIT_BAD_DATA = 4
EXIT_PROCESSING = 5


class CliError(Exception):
    def __init__(self, message, code):
        super().__init__(message)
        self.code = code


def _load_wav(path):
    try:
        return read_wav(path)
    except FileNotFoundError:
        raise CliError(f"cannot open {path}", EXIT_MISSING_INPUT)
    except (ValueError, EOFError, wave.Error) as exc:
        raise CliError(f"{path}: {exc}", EXIT_BAD_DATA)


def _load_weights(path):
    try:
        return load_model(path)
    except FileNotFoundError:
        raise CliError(f"cannot open {path}", EXIT_MISSING_INPUT)
    except WeightFormatError as exc:
        raise CliError(f"{path}: {exc}", EXIT_BAD_DATA)


def _emit(text, out_path):
    if out_path:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def cmd_analyze(args):
    wav = _load_wav(args.infile)
    try:
        frames = analyze(wav)
    except ValueError as exc:
        raise CliError(str(exc), EXIT_BAD_DATA)
    write_features(args.out, frames)
    return EXIT_OK


def cmd_synth(args):
    weights = _load_weights(args.weights)
    try:
        features = read_features(args.features)
    except FileNotFoundError:
        raise CliError(f"cannot open {args.features}", EXIT_MISSING_INPUT)
    except ValueError as exc:
        raise CliError(str(exc), EXIT_BAD_DATA)
    if not features:
        raise CliError(f"{args.features}: no feature frames", EXIT_BAD_DATA)
    try:
        sig, clipped = synthesize_to_speech(features, weights, streaming=args.streaming)
    except AuditError as exc:
        raise CliError(str(exc), EXIT_BAD_DATA)
    write_wav(args.out, sig)
    if clipped:
        print(f"warning: {clipped} samples clipped", file=sys.stderr)
    return EXIT_OK


def cmd_flops(args):
    weights = _load_weights(args.weights)
    report = count_flops(weights)
    print(report.as_table())
    if args.kv:
        _emit(report.as_keyvalues(), args.kv)
    return EXIT_OK


def cmd_sparsify(args):
    weights = _load_weights(args.weights)
    if args.plan == "paper":
        plan = paper_density_plan(weights)
    else:
        try:
            with open(args.plan, encoding="utf-8") as fh:
                plan = json.load(fh)
        except FileNotFoundError:
            raise CliError(f"cannot open {args.plan}", EXIT_MISSING_INPUT)
        except json.JSONDecodeError as exc:
            raise CliError(f"{args.plan}: {exc}", EXIT_BAD_DATA)
    try:
        pruned = prune(weights, plan)
    except ValueError as exc:
        raise CliError(str(exc), EXIT_BAD_DATA)
    save_model(pruned, args.out)
    report = count_flops(pruned)
    print(
        f"active parameters: {report.params_active} of {report.params_total} "
        f"({report.label})"
    )
    return EXIT_OK


def cmd_bench(args):
    weights = _load_weights(args.weights)
    if args.seconds <= 0:
        raise CliError("--seconds must be positive", EXIT_BAD_DATA)
    try:
        infer_config(weights)
    except AuditError as exc:
        raise CliError(str(exc), EXIT_BAD_DATA)
    report = bench_rtf(weights, args.seconds, threads=args.threads)
    print(report.as_text())
    if args.kv:
        _emit(report.as_keyvalues(), args.kv)
    return EXIT_OK


def cmd_eval(args):
    ref = _load_wav(args.ref)
    deg = _load_wav(args.deg)
    try:
        p = pmae(ref, deg)
        v = vde(ref, deg)
    except ValueError as exc:
        raise CliError(str(exc), EXIT_PROCESSING)
    print(format_metric_table([(args.label, p, v)]))
    return EXIT_OK


def cmd_loss(args):
    ref = _load_wav(args.ref)
    deg = _load_wav(args.deg)
    if len(ref) != len(deg):
        raise CliError(
            f"duration mismatch: {len(ref)} vs {len(deg)} samples", EXIT_BAD_DATA
        )
    try:
        report = spectral_losses(ref.samples, deg.samples)
    except ValueError as exc:
        raise CliError(str(exc), EXIT_PROCESSING)
    print(report.as_text())
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(
        prog="fwgan", description="Framewise neural vocoder toolkit"
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="extract conditioning features from a WAV")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("synth", help="synthesize speech from features")
    p.add_argument("--weights", required=True)
    p.add_argument("--features", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--streaming", action="store_true")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("flops", help="complexity report for a model")
    p.add_argument("--weights", required=True)
    p.add_argument("--kv", help="also write a machine-readable key/value file")
    p.set_defaults(func=cmd_flops)

    p = sub.add_parser("sparsify", help="magnitude-prune a model")
    p.add_argument("--weights", required=True)
    p.add_argument("--plan", required=True, help="JSON density map or 'paper'")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_sparsify)

    p = sub.add_parser("bench", help="real-time-factor benchmark")
    p.add_argument("--weights", required=True)
    p.add_argument("--seconds", type=float, required=True)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--kv", help="also write a machine-readable key/value file")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("eval", help="PMAE/VDE of a degraded file vs a reference")
    p.add_argument("--ref", required=True)
    p.add_argument("--deg", required=True)
    p.add_argument("--label", default="degraded")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("loss", help="multi-resolution spectral losses")
    p.add_argument("--ref", required=True)
    p.add_argument("--deg", required=True)
    p.set_defaults(func=cmd_loss)

    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
