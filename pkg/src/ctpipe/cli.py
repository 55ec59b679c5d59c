"""ctpipe command-line interface.

Single-stage commands (ingest, trim, resize, normalize, augment) exist so
every stage is testable in isolation from files; `pipeline` runs the whole
path over a manifest. `stats`, `weights`, and `eval` cover dataset
statistics, loss-weight derivation, and Macro F1 evaluation; `attn-demo`
prints a step-by-step split-attention trace.

Exit codes: 0 clean, 2 partial per-scan failure, 1 fatal.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import augment as aug
from .errors import CTPipeError, SchemaError
from .ingestion import (
    CATEGORIES,
    SPLITS,
    DatasetStats,
    assemble_volume,
    dataset_stats,
    list_slice_files,
    load_manifest,
)
from .loss_metrics import confusion, macro_f1
from .lung_trim import TrimParams, apply_trim, detect_lung_range
from .pipeline import PipelineConfig, derive_weights, run_pipeline
from .resample import TargetShape, normalize_unit, resize_trilinear
from .split_attention import SplitAttnParams, demo_params, demo_splits, forward_intermediates
from .volume import load_volume, save_volume

log = logging.getLogger("ctpipe")

LOGIT_HEADER = ("scan_id", "logit_A", "logit_G", "logit_Covid", "logit_Normal")
LABEL_HEADER = ("scan_id", "predicted_label")


def _pair(text: str) -> tuple[float, float]:
    parts = text.split(",")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(f"expected 'lo,hi', got {text!r}")
    return float(parts[0]), float(parts[1])


def _out_path(args, default_suffix: str) -> Path:
    if args.out:
        return Path(args.out)
    src = Path(args.input)
    return src.with_name(src.stem + default_suffix + ".npy")


# --- single-stage commands -------------------------------------------------

def cmd_ingest(args) -> int:
    files = list_slice_files(args.input_dir)
    volume = assemble_volume(files)
    scan_id = args.scan_id or Path(args.input_dir).name
    out = Path(args.out) if args.out else Path(args.input_dir).with_suffix(".npy")
    npy_path, _ = save_volume(volume, out, scan_id)
    log.info("assembled %s slices into %s %s", len(files), volume.shape, npy_path)
    return 0


def cmd_trim(args) -> int:
    volume, scan_id = load_volume(args.input)
    params = TrimParams(
        air_fraction_threshold=args.air_threshold,
        intensity_air_cutoff=args.air_cutoff,
        min_run=args.min_run,
    )
    trim = detect_lung_range(volume, params)
    out = _out_path(args, ".trimmed")
    save_volume(apply_trim(volume, trim), out, scan_id)
    if args.emit_range:
        range_path = out.with_suffix(".trim.json")
        range_path.write_text(
            json.dumps({"d_lo": trim.d_lo, "d_hi": trim.d_hi}) + "\n", encoding="utf-8"
        )
    log.info("kept slices [%d, %d] of %d -> %s", trim.d_lo, trim.d_hi, volume.shape[0], out)
    return 0


def cmd_resize(args) -> int:
    volume, scan_id = load_volume(args.input)
    target = TargetShape(args.depth, args.height, args.width)
    out = _out_path(args, ".resized")
    save_volume(resize_trilinear(volume, target), out, scan_id)
    log.info("resized %s -> %s at %s", volume.shape, target.as_tuple(), out)
    return 0


def cmd_normalize(args) -> int:
    volume, scan_id = load_volume(args.input)
    if float(volume.data.min()) == float(volume.data.max()):
        log.warning("constant volume %s; output is all zeros", scan_id)
    out = _out_path(args, ".unit")
    save_volume(normalize_unit(volume), out, scan_id)
    log.info("normalized to [0, 1] -> %s", out)
    return 0


def cmd_augment(args) -> int:
    volume, scan_id = load_volume(args.input)
    params = aug.AugmentParams(
        crop_scale_range=args.crop_scale,
        depth_crop=args.depth,
        rotation_range_deg=args.rot_deg,
        brightness_delta_max=args.brightness,
        contrast_factor_range=args.contrast,
        seed=args.seed,
    )
    out_volume, draws = aug.augment_pipeline(volume, params, scan_id, args.epoch)
    out = _out_path(args, ".aug")
    save_volume(out_volume, out, scan_id)
    if args.log_draws:
        Path(args.log_draws).write_text(
            json.dumps(draws.to_json_dict(), indent=2) + "\n", encoding="utf-8"
        )
    log.info("augmented %s (epoch %d) -> %s", scan_id, args.epoch, out)
    return 0


# --- batch + reporting commands ---------------------------------------------

def cmd_pipeline(args) -> int:
    if args.config:
        payload = json.loads(Path(args.config).read_text(encoding="utf-8"))
        config = PipelineConfig.from_json_dict(payload)
    else:
        if not (args.manifest and args.out_dir):
            log.error("pipeline needs --config or both --manifest and --out-dir")
            return 1
        config = PipelineConfig(manifest=args.manifest, out_dir=args.out_dir)

    if args.manifest:
        config.manifest = Path(args.manifest)
    if args.out_dir:
        config.out_dir = Path(args.out_dir)
    trim_kwargs = {}
    if args.air_threshold is not None:
        trim_kwargs["air_fraction_threshold"] = args.air_threshold
    if args.air_cutoff is not None:
        trim_kwargs["intensity_air_cutoff"] = args.air_cutoff
    if args.min_run is not None:
        trim_kwargs["min_run"] = args.min_run
    if trim_kwargs:
        from dataclasses import replace

        config.trim = replace(config.trim, **trim_kwargs)
    if args.depth is not None or args.height is not None or args.width is not None:
        config.target = TargetShape(
            args.depth if args.depth is not None else config.target.d,
            args.height if args.height is not None else config.target.h,
            args.width if args.width is not None else config.target.w,
        )
    if args.augment is not None:
        config.augment = args.augment
    if args.epoch is not None:
        config.epoch = args.epoch
    if args.seed is not None:
        config.seed = args.seed
    if args.weight_scheme is not None:
        config.weight_scheme = args.weight_scheme
    if args.normalize_before_resize is not None:
        config.normalize_before_resize = args.normalize_before_resize
    if args.workers is not None:
        config.workers = args.workers
    env_workers = os.environ.get("CTPIPE_WORKERS")
    if env_workers:
        config.workers = int(env_workers)

    report = run_pipeline(config)
    for scan in report.failed:
        log.warning("scan %s failed: %s", scan["scan_id"], scan["error"])
    log.info(
        "%d/%d scans ok in %.2fs (%d workers); report at %s",
        len(report.scans) - len(report.failed),
        len(report.scans),
        report.wall_clock_s,
        report.workers,
        config.out_dir / "run_report.json",
    )
    if args.report_dir:
        from .report import write_pipeline_report

        for path in write_pipeline_report(report.to_json_dict(), args.report_dir):
            log.info("wrote %s", path)
    return 2 if report.failed else 0


def _format_cell(stats: DatasetStats, split: str, label: str | None) -> str:
    if label is None:
        return f"{stats.totals[(split, 'female')]}/{stats.totals[(split, 'male')]}"
    f = stats.counts[(split, label, "female")]
    m = stats.counts[(split, label, "male")]
    return f"{f}/{m}"


def format_stats_table(stats: DatasetStats) -> str:
    """female/male counts in a Total, A, Covid, G, Normal column layout."""
    columns = ["Total", "A", "Covid", "G", "Normal"]
    titles = {"train": "Training", "val": "Validation"}
    rows = [["Set"] + columns]
    for split in SPLITS:
        cells = [_format_cell(stats, split, None if c == "Total" else c) for c in columns]
        rows.append([titles[split]] + cells)
    widths = [max(len(r[i]) for r in rows) for i in range(len(columns) + 1)]
    return "\n".join(
        "  ".join(cell.ljust(width) for cell, width in zip(row, widths)).rstrip()
        for row in rows
    )


def cmd_stats(args) -> int:
    manifest = load_manifest(args.manifest)
    stats = dataset_stats(manifest)
    print(format_stats_table(stats))
    if args.json:
        print(json.dumps(stats.to_json_dict(), indent=2))
    if args.reference:
        reference = json.loads(Path(args.reference).read_text(encoding="utf-8"))
        mismatches = 0
        for split, cells in reference.items():
            for label, expected in cells.items():
                computed = _format_cell(stats, split, None if label == "total" else label)
                expected_text = f"{expected[0]}/{expected[1]}"
                status = "ok" if computed == expected_text else "MISMATCH"
                mismatches += status != "ok"
                print(f"{split:>6s} {label:>7s}: computed {computed:>9s}  expected {expected_text:>9s}  {status}")
        print(f"reference check: {mismatches} mismatching cells")
    if args.report_dir:
        from .report import write_stats_report

        for path in write_stats_report(stats, args.report_dir):
            log.info("wrote %s", path)
    return 0


def cmd_weights(args) -> int:
    manifest = load_manifest(args.manifest)
    payload = derive_weights(manifest, args.scheme, args.split)
    text = json.dumps(payload, indent=2)
    if args.out:
        Path(args.out).write_text(text + "\n", encoding="utf-8")
    else:
        print(text)
    return 0


def read_predictions(path) -> list[tuple[str, str]]:
    """(scan_id, predicted_label) pairs from either predictions format.

    Logit rows take the argmax, ties broken toward the lower category
    index in (A, G, Covid, Normal) order.
    """
    with Path(path).open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = tuple(h.strip() for h in next(reader))
        except StopIteration:
            raise SchemaError(0, "empty predictions file") from None
        rows = [row for row in reader if row and any(f.strip() for f in row)]
    predictions = []
    if header == LABEL_HEADER:
        for i, row in enumerate(rows, start=1):
            if len(row) != 2:
                raise SchemaError(i, f"expected 2 fields, got {len(row)}")
            scan_id, label = row[0].strip(), row[1].strip()
            if label not in CATEGORIES:
                raise SchemaError(i, f"unknown label {label!r}")
            predictions.append((scan_id, label))
    elif header == LOGIT_HEADER:
        for i, row in enumerate(rows, start=1):
            if len(row) != 5:
                raise SchemaError(i, f"expected 5 fields, got {len(row)}")
            logits = np.array([float(v) for v in row[1:]])
            predictions.append((row[0].strip(), CATEGORIES[int(np.argmax(logits))]))
    else:
        raise SchemaError(0, f"unrecognized predictions header {header!r}")
    return predictions


def cmd_eval(args) -> int:
    manifest = load_manifest(args.manifest)
    truth = {rec.scan_id: rec.label for rec in manifest}
    predictions = read_predictions(args.predictions)
    for i, (scan_id, _) in enumerate(predictions, start=1):
        if scan_id not in truth:
            raise SchemaError(i, f"scan_id {scan_id!r} not in manifest")
    true_labels = [truth[scan_id] for scan_id, _ in predictions]
    predicted = [label for _, label in predictions]
    cm = confusion(true_labels, predicted)
    macro, per_category = macro_f1(cm)
    result = {
        "macro_f1": macro,
        "per_category_f1": dict(zip(CATEGORIES, per_category.tolist())),
        "labels": list(CATEGORIES),
        "confusion": cm.counts.tolist(),
    }
    text = json.dumps(result, indent=2)
    if args.out:
        Path(args.out).write_text(text + "\n", encoding="utf-8")
    else:
        print(text)
    if args.report_dir:
        from .report import write_eval_report

        for path in write_eval_report(result, args.report_dir):
            log.info("wrote %s", path)
    return 0


def cmd_attn_demo(args) -> int:
    if args.params:
        payload = json.loads(Path(args.params).read_text(encoding="utf-8"))
        params = SplitAttnParams.from_json_dict(payload)
        rng = np.random.default_rng(args.seed)
        shape = (params.channels, 1, 1, 1) if args.spatial is None else (
            params.channels, *map(int, args.spatial.split(",")))
        splits = [rng.uniform(-1, 1, size=shape) for _ in range(params.radix)]
    else:
        params = demo_params()
        splits = demo_splits()

    stages = forward_intermediates(splits, params)
    fmt = {"precision": 6, "suppress_small": True}
    print(f"radix={params.radix} cardinality={params.cardinality} channels={params.channels}")
    for r, split in enumerate(splits):
        print(f"split[{r}] (per channel): {np.array2string(np.asarray(split).reshape(params.channels, -1).mean(axis=1), **fmt)}")
    print(f"1. fused sum (pooled view): {np.array2string(stages['fused'].mean(axis=(1, 2, 3)), **fmt)}")
    print(f"2. global average pool:     {np.array2string(stages['pooled'], **fmt)}")
    print(f"3. hidden (relu):           {np.array2string(stages['hidden'], **fmt)}")
    print(f"   logits (radix x chan):\n{np.array2string(stages['logits'], **fmt)}")
    print(f"4. attention weights:\n{np.array2string(stages['attention'], **fmt)}")
    print(f"5. output (per channel):    {np.array2string(stages['output'].reshape(params.channels, -1).mean(axis=1), **fmt)}")
    return 0


# --- parser ------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ctpipe",
        description="Chest-CT volumetric preprocessing and evaluation toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="stack a directory of PNG slices into a volume")
    p.add_argument("input_dir")
    p.add_argument("--out")
    p.add_argument("--scan-id")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("trim", help="remove leading/trailing non-lung slices")
    p.add_argument("input")
    p.add_argument("--out")
    p.add_argument("--air-cutoff", type=float, default=0.15)
    p.add_argument("--air-threshold", type=float, default=0.08)
    p.add_argument("--min-run", type=int, default=8)
    p.add_argument("--emit-range", action="store_true")
    p.set_defaults(func=cmd_trim)

    p = sub.add_parser("resize", help="trilinear resize to a fixed grid")
    p.add_argument("input")
    p.add_argument("--out")
    p.add_argument("--depth", type=int, default=64)
    p.add_argument("--height", type=int, default=256)
    p.add_argument("--width", type=int, default=256)
    p.set_defaults(func=cmd_resize)

    p = sub.add_parser("normalize", help="min-max normalize intensities to [0, 1]")
    p.add_argument("input")
    p.add_argument("--out")
    p.set_defaults(func=cmd_normalize)

    p = sub.add_parser("augment", help="seeded augmentation of a unit-domain volume")
    p.add_argument("input")
    p.add_argument("--out")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--epoch", type=int, default=0)
    p.add_argument("--crop-scale", type=_pair, default=(0.7, 1.0), metavar="LO,HI")
    p.add_argument("--depth", type=int, default=64)
    p.add_argument("--rot-deg", type=_pair, default=(-10.0, 10.0), metavar="LO,HI")
    p.add_argument("--brightness", type=float, default=0.1)
    p.add_argument("--contrast", type=_pair, default=(0.9, 1.1), metavar="LO,HI")
    p.add_argument("--log-draws", metavar="PATH")
    p.set_defaults(func=cmd_augment)

    p = sub.add_parser("pipeline", help="run the full path over a manifest")
    p.add_argument("--config", help="JSON file mirroring the pipeline configuration")
    p.add_argument("--manifest")
    p.add_argument("--out-dir")
    p.add_argument("--workers", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--epoch", type=int)
    p.add_argument("--augment", action=argparse.BooleanOptionalAction)
    p.add_argument("--weight-scheme", choices=["inverse_frequency", "uniform"])
    p.add_argument("--normalize-before-resize", action=argparse.BooleanOptionalAction)
    p.add_argument("--air-cutoff", type=float)
    p.add_argument("--air-threshold", type=float)
    p.add_argument("--min-run", type=int)
    p.add_argument("--depth", type=int)
    p.add_argument("--height", type=int)
    p.add_argument("--width", type=int)
    p.add_argument("--report-dir")
    p.set_defaults(func=cmd_pipeline)

    p = sub.add_parser("stats", help="dataset statistics as a female/male table")
    p.add_argument("manifest")
    p.add_argument("--json", action="store_true")
    p.add_argument("--reference", help="JSON of expected female/male cells")
    p.add_argument("--report-dir")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("weights", help="derive per-category loss weights")
    p.add_argument("manifest")
    p.add_argument("--split", choices=["train", "val", "all"], default="train")
    p.add_argument("--scheme", choices=["inverse_frequency", "uniform"],
                   default="inverse_frequency")
    p.add_argument("--out")
    p.set_defaults(func=cmd_weights)

    p = sub.add_parser("eval", help="Macro F1 of a predictions CSV against a manifest")
    p.add_argument("predictions")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out")
    p.add_argument("--report-dir")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("attn-demo", help="trace one split-attention forward pass")
    p.add_argument("--params", help="JSON {R, K, channels, W1, b1, W2, b2}")
    p.add_argument("--seed", type=int, default=0, help="input seed when --params is given")
    p.add_argument("--spatial", help="D,H,W of random inputs (default 1,1,1)")
    p.set_defaults(func=cmd_attn_demo)

    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CTPipeError as exc:
        log.error("%s", exc)
        return 1
    except (OSError, ValueError, json.JSONDecodeError) as exc:
        log.error("%s: %s", type(exc).__name__, exc)
        return 1


if __name__ == "__main__":
    sys.exit(main())
