"""Command-line interface: ``pbdetect synth|segment|train|evaluate|report``.

Exit codes: 0 success, 1 usage, 2 data error, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from collections import Counter
from dataclasses import replace
from pathlib import Path

from .augment import AugmentSpec, align_sample_labels, augment_training_set
from .config import OUTPUT_ENV, ConfigError, ExperimentConfig
from .dataio import ActivityType, DataFormatError, SyntheticSpec, generate_synthetic
from .eval.experiment import run_experiment, write_report
from .eval.folds import Scheme
from .labelfuse import Granularity, sample_labels, write_label_dump
from .model.checkpoint import save_checkpoint
from .model.lstm import NumericalError
from .model.network import TIMESTEP
from .model.train import train
from .rng import derive_seed
from .windowing import Padding, expected_frame_count, parse_sweep, segment_dataset, write_frames_csv

log = logging.getLogger("pbdetect")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _labels_arg(text: str) -> Granularity:
    try:
        return Granularity.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="YAML experiment configuration; flags override it")
    p.add_argument("--seed", type=int, help="global seed (default 0)")
    p.add_argument("--output-dir", help=f"output directory (default ${OUTPUT_ENV} or ./pbdetect-out)")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")


def _add_data(p: argparse.ArgumentParser) -> None:
    p.add_argument("--manifest", help="dataset manifest.json (default: generate the synthetic set in memory)")
    p.add_argument("--activity", help="restrict to one activity, e.g. sit-to-stand")


def _add_windows(p: argparse.ArgumentParser) -> None:
    p.add_argument("--window", type=float, nargs="+", metavar="SECONDS", help="window length(s) in seconds (default 3)")
    p.add_argument("--overlap", type=float, help="window overlap fraction (default 0.75)")
    p.add_argument("--padding", choices=[m.value for m in Padding], help="padding mode (default zero)")


def _add_labels(p: argparse.ArgumentParser) -> None:
    p.add_argument("--labels", type=_labels_arg, help="binary | tri[:N] | quad[:N[:split]] (default binary)")
    p.add_argument("--n", type=int, help="rater agreement N for tri/quad labels")
    p.add_argument("--split", type=float, help="ratio-sum split for quad labels (default 1.5)")


def _add_model(p: argparse.ArgumentParser) -> None:
    p.add_argument("--arch", choices=["stacked", "dual-stream"], help="network architecture (default stacked)")
    p.add_argument("--head", choices=["frame", "timestep"], help="softmax per frame or per timestep (default frame)")
    p.add_argument("--epochs", type=int, help="training epochs (default 100, early stop patience 10)")
    p.add_argument("--augment", help="comma list of jitter,crop,reverse or 'none' (default jitter,crop)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="pbdetect", description="Protective-behaviour detection from wearable-sensor time series.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("synth", help="write a seeded synthetic dataset")
    _add_common(p)
    p.add_argument("--rater-count", type=int, help="simulated raters (>= 2, default 4)")
    p.add_argument("--n-healthy", type=int, help="healthy subjects (default 12)")
    p.add_argument("--n-cp", type=int, help="chronic-pain subjects (default 18)")
    p.add_argument("--prevalence", type=float, help="chance a CP instance holds a protective episode (default 0.5)")

    p = sub.add_parser("segment", help="print frame counts and label histograms")
    _add_common(p)
    _add_data(p)
    _add_windows(p)
    _add_labels(p)
    p.add_argument("--dump-frames", help="write frames to this CSV")
    p.add_argument("--dump-labels", help="write per-frame rater ratios and fused labels to this CSV")

    p = sub.add_parser("train", help="train on the whole dataset and write a checkpoint")
    _add_common(p)
    _add_data(p)
    _add_windows(p)
    _add_labels(p)
    _add_model(p)

    p = sub.add_parser("evaluate", help="cross-validated experiment; writes report JSON and confusion CSVs")
    _add_common(p)
    _add_data(p)
    _add_windows(p)
    _add_labels(p)
    _add_model(p)
    p.add_argument("--scheme", choices=[s.value for s in Scheme], help="fold scheme (default loso)")
    p.add_argument("--window-sweep", metavar="START:STOP:STEP", help="one report per window length, e.g. 1:7:0.5")
    p.add_argument("--jobs", type=int, default=1, help="folds run in parallel (results do not depend on it)")
    p.add_argument("--strict", action="store_true", help="exit nonzero if any fold fails")

    p = sub.add_parser("report", help="merge report JSON files into one table")
    p.add_argument("reports", nargs="*", help="report JSON files")
    p.add_argument("--output", help="summary CSV path (default: print only)")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    return parser


def _config(args) -> ExperimentConfig:
    try:
        return _build_config(args)
    except ConfigError:
        raise
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _build_config(args) -> ExperimentConfig:
    cfg = ExperimentConfig.load(args.config) if getattr(args, "config", None) else ExperimentConfig()
    changes: dict = {"seed": args.seed, "output_dir": args.output_dir}
    if getattr(args, "manifest", None):
        changes["manifest"] = args.manifest
        cfg = replace(cfg, synthetic=None) if cfg.synthetic is not None else cfg
    if getattr(args, "activity", None):
        changes["activity"] = ActivityType.parse(args.activity)
    if getattr(args, "window", None):
        changes["window_lengths_s"] = tuple(args.window)
    changes["overlap"] = getattr(args, "overlap", None)
    if getattr(args, "padding", None):
        changes["padding"] = Padding.parse(args.padding)
    labels = getattr(args, "labels", None) or cfg.labels
    if getattr(args, "n", None) is not None or getattr(args, "split", None) is not None:
        if labels.kind == "binary":
            raise UsageError("--n/--split apply to tri or quad labels only")
        labels = replace(labels, n=args.n if args.n is not None else labels.n)
        if args.split is not None:
            labels = replace(labels, split=args.split)
    changes["labels"] = labels
    model = cfg.model
    if getattr(args, "arch", None):
        model = replace(model, architecture=args.arch)
    if getattr(args, "head", None):
        model = replace(model, head=args.head)
    changes["model"] = model
    if getattr(args, "epochs", None) is not None:
        changes["train"] = replace(cfg.train, epochs=args.epochs)
    if getattr(args, "augment", None):
        if args.augment.strip().lower() == "none":
            cfg = replace(cfg, augment=None)
        else:
            base = cfg.augment or AugmentSpec()
            changes["augment"] = replace(base, methods=frozenset(args.augment.split(",")))
    if getattr(args, "scheme", None):
        changes["scheme"] = Scheme.parse(args.scheme)
    return cfg.override(**changes)


def cmd_synth(args) -> int:
    cfg = _config(args)
    spec = cfg.synthetic or SyntheticSpec()
    kw = {
        "seed": args.seed,
        "rater_count": args.rater_count,
        "n_healthy": args.n_healthy,
        "n_cp": args.n_cp,
        "protective_prevalence": args.prevalence,
    }
    spec = replace(spec, **{k: v for k, v in kw.items() if v is not None})
    if args.n_healthy is not None or args.n_cp is not None:
        spec = replace(
            spec,
            two_trial_healthy=min(spec.two_trial_healthy, spec.n_healthy),
            two_trial_cp=min(spec.two_trial_cp, spec.n_cp),
        )
    try:
        spec.validate()
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    ds = generate_synthetic(spec)
    out = cfg.resolved_output_dir()
    manifest = ds.write(out)
    n_cp = sum(1 for s in ds.manifest.subjects if s.cohort.value == "cp")
    marked = sum(int((s.raters.sum(axis=0) >= 2).sum()) for s in ds.sequences)
    total = sum(len(s) for s in ds.sequences)
    print(f"wrote {manifest}")
    print(f"subjects     {len(ds.manifest.subjects)} ({len(ds.manifest.subjects) - n_cp} healthy, {n_cp} cp)")
    print(f"sequences    {len(ds.sequences)}")
    print(f"samples      {total}")
    print(f"protective   {marked / total:.3f} of samples (majority of {spec.rater_count} raters)")
    return EXIT_OK


def cmd_segment(args) -> int:
    cfg = _config(args)
    sequences = cfg.load_sequences()
    specs = cfg.window_specs()
    frames = []
    for spec in specs:
        part = segment_dataset(sequences, spec, cfg.activity)
        expected = expected_frame_count(sequences, spec, cfg.activity)
        if len(part) != expected:
            raise RuntimeError(f"segmented {len(part)} frames, expected {expected}")
        frames.extend(part)
    gran = cfg.labels
    labels = gran.labels(frames) if frames else []
    per_activity = Counter(f.activity for f in frames)
    print("window   " + ", ".join(f"{s.seconds:g}s (W={s.window_len}, S={s.step}, {s.padding.value})" for s in specs))
    print(f"frames   {len(frames)}")
    for act in ActivityType:
        if cfg.activity is None or act == cfg.activity:
            print(f"  {act.slug:<15} {per_activity.get(act, 0)}")
    print(f"labels   {gran}")
    hist = Counter(int(x) for x in labels)
    for k, name in enumerate(gran.class_names):
        print(f"  {name:<15} {hist.get(k, 0)}")
    if args.dump_frames:
        write_frames_csv(frames, args.dump_frames)
    if args.dump_labels:
        n = gran.n if gran.kind != "binary" else 2
        write_label_dump(frames, args.dump_labels, tri_n=n, quad_n=max(n, 2), split=gran.split)
    return EXIT_OK


def cmd_train(args) -> int:
    cfg = _config(args)
    sequences = cfg.load_sequences()
    setup = cfg.setup()
    frames = []
    for spec in setup.windows:
        frames.extend(segment_dataset(sequences, spec, cfg.activity))
    if not frames:
        raise DataFormatError("no frames to train on")
    if setup.model.head == TIMESTEP:
        labels = [sample_labels(f) for f in frames]
    else:
        labels = setup.granularity.labels(frames)
    if setup.augment is not None:
        aug = augment_training_set(frames, replace(setup.augment, seed=derive_seed(cfg.seed, "augment")))
        n = len(frames)
        if setup.model.head == TIMESTEP:
            labels = [align_sample_labels(f, labels[i % n]) for i, f in enumerate(aug)]
        else:
            labels = [labels[i % n] for i in range(len(aug))]
        frames = aug
    tcfg = replace(setup.train, seed=derive_seed(cfg.seed, "train"))
    model = train(frames, labels, setup.model, tcfg)
    out = cfg.resolved_output_dir()
    out.mkdir(parents=True, exist_ok=True)
    save_checkpoint(model, out / "checkpoint.json")
    with (out / "loss.csv").open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["epoch", "loss"])
        for i, loss in enumerate(model.history, 1):
            writer.writerow([i, repr(loss)])
    arch = setup.model
    units = arch.hidden if arch.architecture == "stacked" else "+".join(map(str, arch.stream_hidden))
    print(f"trained {arch.architecture} {arch.layers}x{units} on {len(frames)} frames, {len(model.history)} epochs")
    if model.history:
        print(f"final training loss {model.history[-1]:.5f}")
    print(f"wrote {out / 'checkpoint.json'}")
    return EXIT_OK


def cmd_evaluate(args) -> int:
    cfg = _config(args)
    if args.jobs < 1:
        raise UsageError("--jobs must be >= 1")
    sequences = cfg.load_sequences()
    plan = cfg.plan(sequences)
    sweep = [(s,) for s in parse_sweep(args.window_sweep)] if args.window_sweep else [None]
    out = cfg.resolved_output_dir()
    failed: list[str] = []
    for lengths in sweep:
        setup = cfg.setup(lengths)
        result = run_experiment(sequences, setup, plan, jobs=args.jobs, data=cfg.data_source())
        stem = f"report_{plan.scheme.value}"
        if lengths is not None:
            stem += f"_w{lengths[0]:g}s"
        path = write_report(result, out, stem)
        summary = "no successful folds"
        if result.pooled:
            p = result.pooled
            summary = f"Acc {p.accuracy:.4f}  F_m {p.f_mean:.4f}  Pre {p.precision_mean:.4f}  Re {p.recall_mean:.4f}"
        print(f"{path}: {len(plan)} folds, {summary}")
        for fold, err in result.errors:
            print(f"  fold {fold} failed: {err}", file=sys.stderr)
            failed.append(err)
    if failed and args.strict:
        return EXIT_NUMERIC if any(e.startswith(NumericalError.__name__) for e in failed) else EXIT_DATA
    return EXIT_OK


REPORT_COLUMNS = ["scheme", "labels", "arch", "windows_s", "folds", "accuracy", "f_mean", "precision", "recall", "config_hash", "source"]


def _report_row(path: str) -> dict:
    try:
        d = json.loads(Path(path).read_text())
        pooled = d["pooled"] or {}
        cfg = d["config"]
        return {
            "scheme": d["scheme"],
            "labels": cfg["labels"],
            "arch": f"{cfg['model']['architecture']}/{cfg['model']['head']}",
            "windows_s": "+".join(f"{w['seconds']:g}" for w in cfg["windows"]),
            "folds": d["n_folds"],
            "accuracy": pooled.get("accuracy"),
            "f_mean": pooled.get("f_mean"),
            "precision": pooled.get("precision_mean"),
            "recall": pooled.get("recall_mean"),
            "config_hash": d["config_hash"],
            "source": str(path),
        }
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise DataFormatError(f"malformed report file {path}: {exc}") from exc


def _fmt(v) -> str:
    if v is None:
        return "-"
    return f"{v:.4f}" if isinstance(v, float) else str(v)


def cmd_report(args) -> int:
    if not args.reports:
        raise UsageError("report needs at least one report file")
    rows: dict[str, dict] = {}
    for path in args.reports:
        row = _report_row(path)
        rows.setdefault(row["config_hash"], row)
    table = sorted(rows.values(), key=lambda r: (r["scheme"], r["labels"], r["arch"], r["windows_s"], r["config_hash"]))
    buf = io.StringIO()
    writer = csv.DictWriter(buf, REPORT_COLUMNS, lineterminator="\n")
    writer.writeheader()
    writer.writerows(table)
    if args.output:
        Path(args.output).parent.mkdir(parents=True, exist_ok=True)
        Path(args.output).write_text(buf.getvalue())
    shown = REPORT_COLUMNS[:-1]
    cells = [shown] + [[_fmt(r[c]) for c in shown] for r in table]
    widths = [max(len(row[i]) for row in cells) for i in range(len(shown))]
    for row in cells:
        print("  ".join(v.ljust(w) for v, w in zip(row, widths)).rstrip())
    return EXIT_OK


COMMANDS = {
    "synth": cmd_synth,
    "segment": cmd_segment,
    "train": cmd_train,
    "evaluate": cmd_evaluate,
    "report": cmd_report,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        return COMMANDS[args.command](args)
    except (UsageError, ConfigError) as exc:
        print(f"pbdetect {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericalError as exc:
        print(f"pbdetect {args.command}: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (DataFormatError, OSError, ValueError) as exc:
        print(f"pbdetect {args.command}: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
