"""
Command Line
============
``curvednet gen-data | train | score | eval | report | gradcheck | compare``

Every command returns a process exit code:
    0 success, 2 input error, 3 training divergence,
    4 metric precondition, 5 gradient check failure.
"""

import os
import csv
import sys
import math
import logging
import argparse
from dataclasses import replace

from curvednet import __version__
from curvednet import data, experiment, gradcheck, metrics, models, report, scoring
from curvednet.config import RunConfig, load_run_config, validate_run_config, SCORES_HEADER, SPLITS
from curvednet.errors import CurvedNetError, ParseError, EXIT_OK, EXIT_INPUT_ERROR
from curvednet.formatters import format_key_values, format_table
from curvednet.guards import sanitize_sample_id

logger = logging.getLogger(__name__)


# ── Helpers ──────────────────────────────────────────────


def _config(args):
    cfg = load_run_config(args.config) if getattr(args, "config", None) else RunConfig()
    if getattr(args, "seed", None) is not None:
        cfg = replace(cfg, seed=args.seed)
        validate_run_config(cfg)
    return cfg


def _ensure_parent(path):
    parent = os.path.dirname(os.path.abspath(path))
    os.makedirs(parent, exist_ok=True)


def write_scores(rows, path):
    _ensure_parent(path)
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(SCORES_HEADER)
        for sample_id, split, z, anomaly in rows:
            writer.writerow([sample_id, split, repr(float(z)), repr(float(anomaly))])
    logger.info("Wrote %d scores to %s", len(rows), path)


def read_scores(path):
    """Parse a scores CSV into (id, split, z, as) rows; ParseError names the line."""
    if not os.path.exists(path):
        raise FileNotFoundError(f"Scores file not found: {path}")
    with open(path, "r", encoding="utf-8", newline="") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header is None or tuple(c.strip() for c in header) != SCORES_HEADER:
            raise ParseError(f"header must be '{','.join(SCORES_HEADER)}'", 1, path)
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(SCORES_HEADER):
                raise ParseError(f"expected {len(SCORES_HEADER)} columns, got {len(row)}", lineno, path)
            split = row[1].strip()
            if split not in SPLITS:
                raise ParseError(f"unknown split '{split}'", lineno, path)
            try:
                z, anomaly = float(row[2]), float(row[3])
            except ValueError:
                raise ParseError("z and as must be numbers", lineno, path)
            if not (math.isfinite(z) and math.isfinite(anomaly)):
                raise ParseError("scores must be finite", lineno, path)
            rows.append((sanitize_sample_id(row[0]), split, z, anomaly))
    return rows


def _write_text(text, path):
    if path:
        _ensure_parent(path)
        with open(path, "w", encoding="utf-8") as f:
            f.write(text)
        logger.info("Wrote %s", path)
    print(text, end="" if text.endswith("\n") else "\n")


# ── Commands ─────────────────────────────────────────────


def cmd_gen_data(args):
    cfg = _config(args)
    splits = experiment.generate(cfg)
    paths = data.write_splits(splits, args.out)
    for path in paths:
        print(f"  wrote {path}")
    return EXIT_OK


def cmd_train(args):
    cfg = _config(args)
    splits = data.load_splits(args.data)
    model, train_report, tc = experiment.fit(cfg, splits.train)
    _ensure_parent(args.model)
    models.save_model(model, args.model, tc)

    summary = {
        "architecture": model.architecture,
        "seed": tc.seed,
        "epochs": tc.epochs,
        "lr": tc.lr,
        "initial_loss": train_report.initial_loss,
        "final_loss": train_report.epoch_losses[-1] if train_report.epoch_losses else train_report.initial_loss,
        "accuracy": train_report.accuracy,
        "epoch_losses": train_report.epoch_losses,
    }
    for kind, losses in train_report.branch_losses.items():
        summary[f"loss_{kind}"] = losses
    summary["wall_clock_seconds"] = train_report.wall_clock
    _write_text(format_key_values(summary, title="curvednet train report"), args.model + ".report")
    return EXIT_OK


def cmd_score(args):
    cfg = _config(args)
    model = models.load_model(args.model)
    splits = data.load_splits(args.data)
    rows = experiment.score_splits(model, splits, cfg.score_mode)
    if scoring.is_degenerate([r[2] for r in rows]):
        logger.warning(
            "More than %.0f%% of geometric scores are exactly 0; the embeddings never reach "
            "the clipping radius, so the score cannot rank samples",
            100 * scoring.DEGENERATE_FRACTION,
        )
    write_scores(rows, args.out)
    return EXIT_OK


def cmd_eval(args):
    cfg = _config(args)
    rows = read_scores(args.scores)
    result = metrics.evaluate(
        experiment.score_set(rows), cfg.detection_error_mode, cfg.aupr_positive,
    )
    _write_text(format_key_values(result.as_dict(), title="curvednet metrics"), args.out)
    return EXIT_OK


def cmd_report(args):
    cfg = _config(args)
    rows = read_scores(args.scores)
    density = report.density_report(
        [(r[1], r[2], r[3]) for r in rows], cfg.density_bins, cfg.density_quantity,
    )
    report.write_density(density, args.out)
    print(f"  wrote {args.out}")
    return EXIT_OK


def cmd_gradcheck(args):
    seed = 0 if args.seed is None else args.seed
    try:
        errors = gradcheck.run_gradcheck(seed)
        failed = None
    except CurvedNetError as e:
        errors = getattr(e, "errors", {})
        failed = e
    rows = [{"case": name, "max_rel_error": f"{err:.3e}"} for name, err in errors.items()]
    _write_text(format_table(rows) + "\n", args.out)
    if failed is not None:
        raise failed
    return EXIT_OK


def cmd_compare(args):
    cfg = _config(args)
    result = experiment.run_comparison(cfg)
    text = "# summary\n" + format_table(result.summary()) + "\n\n# runs\n"
    text += format_table(result.runs, ["seed", "architecture", "auroc", "fpr_at_95_tpr",
                                       "detection_error", "aupr", "train_accuracy"]) + "\n"
    if cfg.sweep_curvatures:
        sweep = experiment.run_curvature_sweep(cfg)
        text += "\n# curvature sweep\n" + format_table(sweep.summary()) + "\n"
    _write_text(text, args.out)
    return EXIT_OK


# ── Parser ───────────────────────────────────────────────


def build_parser():
    parser = argparse.ArgumentParser(
        prog="curvednet", description="Curved-geometry anomaly recognition toolkit"
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, handler, help_text, *flags):
        p = sub.add_parser(name, help=help_text)
        p.set_defaults(handler=handler)
        for flag in flags:
            if flag == "seed":
                p.add_argument("--seed", type=int, default=None, help="override the config seed")
            elif flag == "config":
                p.add_argument("--config", default=None, help="run configuration file")
            else:
                required, help_flag = flag[1], flag[2]
                p.add_argument(f"--{flag[0]}", required=required, help=help_flag)
        return p

    add("gen-data", cmd_gen_data, "write synthetic train/test_id/test_ood CSV files",
        "config", "seed", ("out", True, "output directory"))
    add("train", cmd_train, "train a model on a data directory",
        "config", "seed", ("data", True, "data directory"), ("model", True, "model file to write"))
    add("score", cmd_score, "write per-sample scores for test_id and test_ood",
        "config", ("model", True, "model file"), ("data", True, "data directory"),
        ("out", True, "scores CSV to write"))
    add("eval", cmd_eval, "compute metrics from a scores CSV",
        "config", ("scores", True, "scores CSV"), ("out", False, "metrics file to write"))
    add("report", cmd_report, "score density histogram",
        "config", ("scores", True, "scores CSV"), ("out", True, "density CSV to write"))
    add("gradcheck", cmd_gradcheck, "finite-difference gradient checks",
        "seed", ("out", False, "result table to write"))
    add("compare", cmd_compare, "multi-seed comparison of architectures",
        "config", "seed", ("out", False, "table to write"))
    return parser


def main(argv=None):
    """Parse ``argv`` and dispatch; returns the exit code."""
    args = build_parser().parse_args(argv)
    logger.debug("curvednet %s: %s", args.command, vars(args))
    try:
        return args.handler(args)
    except CurvedNetError as e:
        logger.error("%s failed: %s", args.command, e)
        print(f"ERROR: {e}", file=sys.stderr)
        return e.exit_code
    except OSError as e:
        logger.error("%s failed: %s", args.command, e)
        print(f"ERROR: {e}", file=sys.stderr)
        return EXIT_INPUT_ERROR
