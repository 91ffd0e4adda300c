"""Command line entry point: ``motion-interp {train,sample,eval,synth,render}``.

Exit codes: 0 success, 2 bad flags, 3 data problems, 4 non-finite loss.
Set ``MI_LOG_LEVEL`` to ``quiet``, ``info`` or ``debug``.
"""
from __future__ import annotations

import argparse
import logging
import os
import sys
from dataclasses import replace
from pathlib import Path

from .checkpoint import CheckpointError, load_checkpoint
from .data import SPLITS, generate_synthetic_corpus, load_corpus
from .evaluation import evaluate, interpolate, write_report, write_task_scores
from .losses import write_loss_log
from .model import ModelConfig
from .motion import MotionFormatError, SkeletonSpec, concat_motion, read_motion, split_sequence, write_motion
from .render import render_strip
from .training import NonFiniteLossError, TrainConfig, read_config, train

log = logging.getLogger("motion_interp")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NONFINITE = 0, 2, 3, 4
LOG_LEVELS = {"quiet": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}

SYNTH_TRAIN_SEQUENCES, SYNTH_TRAIN_FRAMES = 25, 300
SYNTH_TEST_SEQUENCES, SYNTH_TEST_FRAMES = 10, 250


class CLIError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def _setup_logging():
    name = os.environ.get("MI_LOG_LEVEL", "info").lower()
    level = LOG_LEVELS.get(name, logging.INFO)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s", force=True)
    if name not in LOG_LEVELS:
        log.warning("unknown MI_LOG_LEVEL %r, using info", name)


def _require_file(path, what: str, code: int = EXIT_DATA) -> Path:
    p = Path(path)
    if not p.is_file():
        raise CLIError(code, f"{what} not found: {p}")
    return p


def _load_ckpt(path):
    p = _require_file(path, "checkpoint")
    try:
        return load_checkpoint(p)
    except CheckpointError as exc:
        raise CLIError(EXIT_DATA, f"{p}: {exc}") from None


def cmd_train(args) -> int:
    model_kw, train_kw = {}, {}
    if args.config:
        cfg_path = _require_file(args.config, "config file", EXIT_USAGE)
        try:
            model_kw, train_kw = read_config(cfg_path)
        except ValueError as exc:
            raise CLIError(EXIT_USAGE, str(exc)) from None
    for key, value in (("seed", args.seed), ("lambda_", args.lam), ("epochs", args.epochs)):
        if value is not None:
            train_kw[key] = value
    try:
        tc = TrainConfig(**train_kw)
        probe = ModelConfig(**{"d": 1, **model_kw})
    except ValueError as exc:
        raise CLIError(EXIT_USAGE, str(exc)) from None

    if args.synthetic:
        corpus = generate_synthetic_corpus(SkeletonSpec.h36m17(), args.synthetic_sequences,
                                           args.synthetic_frames, args.synthetic_seed)
    else:
        if not Path(args.data).is_dir():
            raise CLIError(EXIT_DATA, f"data directory not found: {args.data}")
        try:
            corpus = load_corpus(args.data, "train", window=probe.window)
        except MotionFormatError as exc:
            raise CLIError(EXIT_DATA, str(exc)) from None
    if not corpus.items:
        raise CLIError(EXIT_DATA, f"no training sequences of at least {probe.window} frames")
    if "d" in model_kw and model_kw["d"] != corpus.d:
        raise CLIError(EXIT_DATA, f"config sets d={model_kw['d']} but the data has d={corpus.d}")
    mc = replace(probe, d=corpus.d)

    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    log_path = Path(args.log) if args.log else out.with_name(out.name + ".loss.csv")
    log.info("training on %d sequences (d=%d) for %d epochs, lambda=%g", len(corpus), mc.d, tc.epochs, tc.lambda_)
    try:
        result = train(corpus, mc, tc, checkpoint_path=out)
    except NonFiniteLossError as exc:
        raise CLIError(EXIT_NONFINITE, str(exc)) from None
    except ValueError as exc:
        raise CLIError(EXIT_DATA, str(exc)) from None
    write_loss_log(result.log, log_path)
    log.info("wrote %s and %s", out, log_path)
    return EXIT_OK


def cmd_sample(args) -> int:
    if args.t_e - args.t_s < 2:
        raise CLIError(EXIT_USAGE, f"--t-e minus --t-s must be at least 2 (got {args.t_s}, {args.t_e})")
    if args.k < 1:
        raise CLIError(EXIT_USAGE, "--k must be at least 1")
    model, cfg, normalizer = _load_ckpt(args.checkpoint)
    src = _require_file(args.input, "input motion")
    try:
        seq = read_motion(src)
        task = split_sequence(seq, args.t_s, args.t_e)
    except (MotionFormatError, IndexError, ValueError) as exc:
        raise CLIError(EXIT_DATA, f"{src}: {exc}") from None
    if seq.d != cfg.d:
        raise CLIError(EXIT_DATA, f"{src} has d={seq.d}, checkpoint expects d={cfg.d}")
    samples = interpolate(model, task, args.k, args.seed, normalizer)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for i, s in enumerate(samples.samples):
        write_motion(concat_motion([task.start, s, task.end]), out / f"sample_{i}.motion")
    log.info("wrote %d samples to %s", args.k, out)
    return EXIT_OK


def cmd_eval(args) -> int:
    if args.k < 2:
        raise CLIError(EXIT_USAGE, f"--k must be at least 2 because APD compares sample pairs (got {args.k})")
    model, cfg, normalizer = _load_ckpt(args.checkpoint)
    if args.data is not None:
        if not Path(args.data).is_dir():
            raise CLIError(EXIT_DATA, f"data directory not found: {args.data}")
        try:
            corpus = load_corpus(args.data, "test", window=cfg.window)
        except MotionFormatError as exc:
            raise CLIError(EXIT_DATA, str(exc)) from None
    else:
        corpus = generate_synthetic_corpus(SkeletonSpec.for_dim(cfg.d), SYNTH_TEST_SEQUENCES,
                                           SYNTH_TEST_FRAMES, args.synthetic_seed, split="test")
    if not corpus.items:
        raise CLIError(EXIT_DATA, "test set is empty")
    if corpus.d != cfg.d:
        raise CLIError(EXIT_DATA, f"test data has d={corpus.d}, checkpoint expects d={cfg.d}")
    try:
        report, scores = evaluate(model, corpus, args.k, args.seed, normalizer)
    except ValueError as exc:
        raise CLIError(EXIT_DATA, str(exc)) from None
    report_path = Path(args.report)
    tasks_path = Path(args.tasks_report) if args.tasks_report else report_path.with_name(report_path.stem + ".tasks.csv")
    write_report(report, report_path)
    write_task_scores(scores, tasks_path)
    print(f"ade={report.ade!r} apd={report.apd!r} mean_boundary_gap={report.mean_boundary_gap!r} "
          f"n_tasks={report.n_tasks} k={report.k}")
    return EXIT_OK


def cmd_synth(args) -> int:
    spec = SkeletonSpec.h36m17() if args.d == 51 else SkeletonSpec.for_dim(args.d)
    if spec.d != args.d:
        raise CLIError(EXIT_USAGE, f"cannot build a skeleton with d={args.d}")
    out = Path(args.out)
    written = 0
    for split, n, frames, seed in (("train", args.n, args.frames, args.seed),
                                   ("test", args.n_test, args.frames, args.seed + 1)):
        if n < 1:
            continue
        try:
            corpus = generate_synthetic_corpus(spec, n, frames, seed, split=split)
        except ValueError as exc:
            raise CLIError(EXIT_USAGE, str(exc)) from None
        for it in corpus.items:
            sub = out / it.subject
            sub.mkdir(parents=True, exist_ok=True)
            write_motion(it.sequence, sub / f"{it.subject}_{it.action}.motion")
            written += 1
    log.info("wrote %d sequences under %s", written, out)
    return EXIT_OK


def cmd_render(args) -> int:
    if args.stride < 1:
        raise CLIError(EXIT_USAGE, "--stride must be positive")
    motions, labels = [], []
    for path in args.input:
        p = _require_file(path, "input motion")
        try:
            motions.append(read_motion(p))
        except MotionFormatError as exc:
            raise CLIError(EXIT_DATA, str(exc)) from None
        labels.append(p.stem)
    for p, m in zip(args.input, motions):
        if m.d != motions[0].d:
            raise CLIError(EXIT_DATA, f"{p} has d={m.d}, but {args.input[0]} has d={motions[0].d}")
    n = render_strip(motions, args.out, args.stride, labels=labels)
    log.info("drew %d figures to %s", n, args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="motion-interp", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train a model")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--data", help="corpus root with <subject>/<subject>_<action>.motion files")
    src.add_argument("--synthetic", action="store_true", help="train on the built-in synthetic corpus")
    p.add_argument("--config", help="key = value config file")
    p.add_argument("--out", required=True, help="checkpoint path")
    p.add_argument("--log", help="loss CSV path (default: <out>.loss.csv)")
    p.add_argument("--seed", type=int)
    p.add_argument("--lambda", dest="lam", type=float)
    p.add_argument("--epochs", type=int)
    p.add_argument("--synthetic-seed", type=int, default=1)
    p.add_argument("--synthetic-sequences", type=int, default=SYNTH_TRAIN_SEQUENCES)
    p.add_argument("--synthetic-frames", type=int, default=SYNTH_TRAIN_FRAMES)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("sample", help="draw K interpolations for one sequence")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--input", required=True, help=".motion file")
    p.add_argument("--t-s", type=int, required=True, help="last start frame (1-based)")
    p.add_argument("--t-e", type=int, required=True, help="first end frame (1-based)")
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("eval", help="ADE / APD on a test set")
    p.add_argument("--checkpoint", required=True)
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--data", help=f"corpus root; loads test subjects {', '.join(SPLITS['test'])}")
    src.add_argument("--synthetic-seed", type=int, help="evaluate on a synthetic test corpus")
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--report", required=True, help="one-line CSV: ade,apd,mean_boundary_gap,n_tasks,k")
    p.add_argument("--tasks-report", help="per-task CSV (default: <report stem>.tasks.csv)")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("synth", help="write a synthetic corpus in the .motion layout")
    p.add_argument("--out", required=True)
    p.add_argument("--n", type=int, default=SYNTH_TRAIN_SEQUENCES, help="training sequences")
    p.add_argument("--n-test", type=int, default=SYNTH_TEST_SEQUENCES, help="test sequences")
    p.add_argument("--frames", type=int, default=SYNTH_TRAIN_FRAMES)
    p.add_argument("--d", type=int, default=51)
    p.add_argument("--seed", type=int, default=1)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("render", help="draw stick-figure strips")
    p.add_argument("--input", nargs="+", required=True)
    p.add_argument("--out", required=True, help="image path; format from suffix, e.g. .svg")
    p.add_argument("--stride", type=int, default=10)
    p.set_defaults(func=cmd_render)
    return parser


def main(argv=None) -> int:
    _setup_logging()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except CLIError as exc:
        print(f"motion-interp {args.command}: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
