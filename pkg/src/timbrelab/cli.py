"""Single entry point: every workflow is a subcommand.

Config precedence is flags > environment > defaults; the recognized
variables are TIMBRELAB_SEED and TIMBRELAB_DEVICE.  With ``--json``
each invocation writes exactly one JSON document to stdout and errors
become single-line JSON on stderr.  Usage problems exit 2, operational
failures exit 1.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import corpus as corpus_mod
from . import explore, training
from .engine import (StreamConfig, SynthEngine, load_automation, open_sink,
                     render_to_wav)
from .errors import ConfigError, TimbrelabError
from .model import (BOTTLENECK_ACTIVATIONS, BOTTLENECK_WIDTHS, ModelConfig,
                    build_model, load_model, read_model_header, save_model)


def _resolve_seed(args, default: int = 0) -> int:
    if getattr(args, "seed", None) is not None:
        return args.seed
    env = os.environ.get("TIMBRELAB_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise ConfigError(f"TIMBRELAB_SEED must be an integer, got {env!r}")
    return default


def _resolve_device(args):
    device = getattr(args, "device", None)
    if device is None:
        device = os.environ.get("TIMBRELAB_DEVICE")
    return device


def _emit(args, doc: dict, human_lines) -> None:
    if args.json:
        print(json.dumps(doc, sort_keys=True))
    else:
        for line in human_lines:
            print(line)


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def cmd_corpus_build(args) -> int:
    clips = corpus_mod.load_manifest(args.clips)
    built = corpus_mod.build_corpus(
        clips,
        augmentation=args.augment,
        seed=_resolve_seed(args),
        drop_silent=args.drop_silent,
        resample=args.resample,
    )
    corpus_mod.save_corpus(built, args.out)
    splits = {s: len(built.split_indices(s)) for s in corpus_mod.SPLITS}
    doc = {
        "out": str(args.out),
        "num_frames": len(built.frames),
        "num_clips": len(built.clips),
        "splits": splits,
        "augmentation": built.augmentation,
        "train_classes": built.present_classes("train"),
        "hash": built.content_hash(),
    }
    _emit(args, doc, [
        f"wrote {args.out}: {doc['num_frames']} frames from {doc['num_clips']} clips",
        f"splits: " + ", ".join(f"{k}={v}" for k, v in splits.items()),
        f"augmentation: {doc['augmentation']}",
        f"hash: {doc['hash']}",
    ])
    return 0


def _parse_widths(text: str) -> tuple:
    try:
        widths = tuple(int(w) for w in text.split(",") if w.strip())
    except ValueError:
        raise ConfigError(f"--widths must be comma-separated integers, got {text!r}")
    if not widths:
        raise ConfigError("--widths must name at least one layer")
    return widths


def cmd_train(args) -> int:
    data = corpus_mod.load_corpus(args.corpus)
    aug = data.augmentation
    config = ModelConfig(
        bottleneck_width=args.bottleneck,
        bottleneck_activation=args.bn_act,
        use_chroma_input=(aug == "chroma"),
        use_chroma_skip=args.skip,
        use_first_order_diff=(aug == "first_order_diff"),
        encoder_widths=_parse_widths(args.widths),
        num_bins=data.frames.shape[1],
    )
    seed = _resolve_seed(args)
    model = build_model(config, seed=seed)
    train_cfg = training.TrainConfig(
        epochs=args.epochs, lr=args.lr, l2_lambda=args.l2,
        batch_size=args.batch, seed=seed, drop_silent=args.drop_silent,
    )

    progress = None
    if not args.json:
        def progress(epoch, train_mse, val_mse):
            if epoch == 1 or epoch % 10 == 0 or epoch == args.epochs:
                print(f"epoch {epoch:4d}  train {train_mse:.6e}  val {val_mse:.6e}",
                      file=sys.stderr)

    model, history = training.train(model, data, train_cfg, progress=progress)
    save_model(model, args.out)
    best_path = Path(args.out).with_suffix(".best.mann")
    best = training.snapshot_model(model, history.best_params)
    save_model(best, best_path)
    if args.history:
        training.export_history(history, args.history)

    doc = {
        "out": str(args.out),
        "best_out": str(best_path),
        "epochs": args.epochs,
        "final_train_mse": history.train_mse[-1],
        "final_val_mse": history.val_mse[-1],
        "final_test_mse": history.final_test_mse,
        "best_epoch": history.best_epoch,
        "best_val_mse": history.best_val_mse,
        "seconds": sum(history.epoch_seconds),
    }
    _emit(args, doc, [
        f"wrote {args.out} (final) and {best_path} (best validation)",
        f"final val MSE {history.val_mse[-1]:.6e}; "
        f"best {history.best_val_mse:.6e} at epoch {history.best_epoch}",
        f"trained {args.epochs} epochs in {doc['seconds']:.1f}s",
    ])
    return 0


def cmd_eval(args) -> int:
    model = load_model(args.model)
    data = corpus_mod.load_corpus(args.corpus)
    mse = training.evaluate_mse(model, data, args.split,
                                drop_silent=args.drop_silent)
    doc = {"model": str(args.model), "split": args.split, "mse": mse}
    _emit(args, doc, [f"{args.split} MSE: {mse:.6e}"])
    return 0


def cmd_mesh(args) -> int:
    model = load_model(args.model)
    data = corpus_mod.load_corpus(args.corpus) if args.corpus else None
    report = explore.sampling_report(model, data, mesh_length=args.mesh_length)
    if args.out:
        explore.export_report(report, args.out)
    doc = json.loads(explore.report_to_json(report))
    doc["out"] = str(args.out) if args.out else None
    lines = [f"mesh {args.mesh_length}^{report.bottleneck_width} "
             f"({report.samples_per_class} points per class)"]
    for name, frac in doc["fractions"].items():
        lines.append(f"  {name:>2}: {'--' if frac is None else f'{frac:.4f}'}")
    if args.out:
        lines.append(f"wrote {args.out}")
    _emit(args, doc, lines)
    return 0


def cmd_embed(args) -> int:
    model = load_model(args.model)
    data = corpus_mod.load_corpus(args.corpus)
    embedding = explore.embed_corpus(model, data, args.split)
    explore.export_embedding(embedding, args.out, svg_path=args.svg)
    doc = {
        "out": str(args.out),
        "svg": str(args.svg) if args.svg else None,
        "split": args.split,
        "points": len(embedding),
        "dims": embedding.dims,
        "bounding_box": embedding.bounding_box.tolist(),
    }
    _emit(args, doc, [
        f"wrote {doc['points']} {doc['dims']}-D points to {args.out}"
        + (f" and {args.svg}" if args.svg else ""),
    ])
    return 0


def cmd_synth(args) -> int:
    from .server import serve_control

    model = load_model(args.model)
    config = StreamConfig(phase_seed=_resolve_seed(args, StreamConfig().phase_seed))
    engine = SynthEngine(model, config)
    device = _resolve_device(args)
    if device == "null":
        sink = open_sink("null")
    else:
        sink = open_sink("device", device=device)
    engine.start(sink)
    try:
        serve_control(engine, port=args.port, host=args.host, ui_dir=args.ui)
    finally:
        engine.stop()
        sink.close()
    return 0


def cmd_render(args) -> int:
    model = load_model(args.model)
    automation = load_automation(args.automation) if args.automation else []
    config = StreamConfig(phase_seed=_resolve_seed(args, StreamConfig().phase_seed))
    samples = render_to_wav(model, automation, args.seconds, args.out, config)
    doc = {
        "out": str(args.out),
        "samples": int(samples.size),
        "seconds": args.seconds,
        "peak": float(np.max(np.abs(samples))) if samples.size else 0.0,
    }
    _emit(args, doc, [
        f"wrote {args.out}: {doc['samples']} samples ({args.seconds}s), "
        f"peak {doc['peak']:.3f}",
    ])
    return 0


def cmd_model_inspect(args) -> int:
    config, header = read_model_header(args.model)
    print(json.dumps(header, sort_keys=True, indent=None if args.json else 2))
    return 0


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="timbrelab",
        description="Spectral-frame autoencoders for timbre interpolation "
                    "and real-time synthesis.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json", action="store_true",
                        help="emit one JSON document on stdout")
    common.add_argument("--seed", type=int, default=None,
                        help="RNG seed (default: $TIMBRELAB_SEED or 0)")

    p_corpus = sub.add_parser("corpus", help="corpus operations")
    corpus_sub = p_corpus.add_subparsers(dest="corpus_command", required=True)
    p_build = corpus_sub.add_parser("build", parents=[common],
                                    help="analyze WAV clips into a frame corpus")
    p_build.add_argument("--clips", required=True,
                         help="JSON manifest: [{path, split, clip_id}, ...]")
    p_build.add_argument("--out", required=True, help="output .tcv path")
    p_build.add_argument("--augment", default="none",
                         choices=list(corpus_mod.AUGMENTATIONS))
    p_build.add_argument("--drop-silent", action="store_true",
                         help="exclude all-zero frames during training")
    p_build.add_argument("--resample", action="store_true",
                         help="linearly resample clips that are not 44.1 kHz")
    p_build.set_defaults(func=cmd_corpus_build)

    p_train = sub.add_parser("train", parents=[common],
                             help="train an autoencoder on a corpus")
    p_train.add_argument("--corpus", required=True)
    p_train.add_argument("--out", required=True, help="output .mann path")
    p_train.add_argument("--bottleneck", type=int, default=8,
                         choices=list(BOTTLENECK_WIDTHS))
    p_train.add_argument("--bn-act", default="sigmoid",
                         choices=list(BOTTLENECK_ACTIVATIONS))
    p_train.add_argument("--skip", action=argparse.BooleanOptionalAction,
                         default=True, help="decoder chroma skip connection")
    p_train.add_argument("--epochs", type=int, default=300)
    p_train.add_argument("--lr", type=float, default=5e-4)
    p_train.add_argument("--l2", type=float, default=1e-7)
    p_train.add_argument("--batch", type=int, default=64)
    p_train.add_argument("--widths", default="512,256,128,64",
                         help="encoder hidden widths, comma-separated")
    p_train.add_argument("--drop-silent", action="store_true")
    p_train.add_argument("--history", default=None,
                         help="write per-epoch loss history CSV here")
    p_train.set_defaults(func=cmd_train)

    p_eval = sub.add_parser("eval", parents=[common],
                            help="mean squared error on a corpus split")
    p_eval.add_argument("--model", required=True)
    p_eval.add_argument("--corpus", required=True)
    p_eval.add_argument("--split", default="test", choices=list(corpus_mod.SPLITS))
    p_eval.add_argument("--drop-silent", action="store_true")
    p_eval.set_defaults(func=cmd_eval)

    p_mesh = sub.add_parser("mesh", parents=[common],
                            help="chroma-match fractions over a latent mesh")
    p_mesh.add_argument("--model", required=True)
    p_mesh.add_argument("--mesh-length", type=int, default=350)
    p_mesh.add_argument("--corpus", default=None,
                        help="source of present classes (default: model metadata)")
    p_mesh.add_argument("--out", default=None, help="report CSV path")
    p_mesh.set_defaults(func=cmd_mesh)

    p_embed = sub.add_parser("embed", parents=[common],
                             help="embed a corpus split into latent space")
    p_embed.add_argument("--model", required=True)
    p_embed.add_argument("--corpus", required=True)
    p_embed.add_argument("--split", default="train", choices=list(corpus_mod.SPLITS))
    p_embed.add_argument("--out", required=True, help="embedding CSV path")
    p_embed.add_argument("--svg", default=None,
                         help="scatter plot path (2-D models only)")
    p_embed.set_defaults(func=cmd_embed)

    p_synth = sub.add_parser("synth", parents=[common],
                             help="live synthesis with the WebSocket control surface")
    p_synth.add_argument("--model", required=True)
    p_synth.add_argument("--port", type=int, default=8765)
    p_synth.add_argument("--host", default="127.0.0.1")
    p_synth.add_argument("--device", default=None,
                         help='output device name, or "null" for no audio '
                              "(default: $TIMBRELAB_DEVICE or system default)")
    p_synth.add_argument("--ui", default=None,
                         help="directory of built control-panel assets to serve at /")
    p_synth.set_defaults(func=cmd_synth)

    p_render = sub.add_parser("render", parents=[common],
                              help="offline render of a control automation to WAV")
    p_render.add_argument("--model", required=True)
    p_render.add_argument("--automation", default=None,
                          help="JSON list of timed control events")
    p_render.add_argument("--seconds", type=float, required=True)
    p_render.add_argument("--out", required=True)
    p_render.set_defaults(func=cmd_render)

    p_inspect = sub.add_parser("model-inspect", parents=[common],
                               help="print a model file's header as JSON")
    p_inspect.add_argument("model", help="path to a .mann model file")
    p_inspect.set_defaults(func=cmd_model_inspect)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except KeyboardInterrupt:
        return 130
    except (TimbrelabError, ValueError, OSError) as exc:
        if getattr(args, "json", False):
            print(json.dumps({"error": type(exc).__name__, "message": str(exc)}),
                  file=sys.stderr)
        else:
            print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
