"""Manifest-driven batch orchestration of the preprocessing stages.

Each scan runs assemble -> trim -> resize -> normalize (-> augment when
requested) and is written as an NPY + sidecar pair named after its
scan_id. Scans fail independently: an error is recorded in the run
report and the batch continues. Augmentation streams are keyed by
(seed, scan_id, epoch), so outputs are bitwise independent of the
worker count.
"""

from __future__ import annotations

import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from functools import partial
from pathlib import Path

from .augment import AugmentParams, augment_pipeline
from .errors import CTPipeError, ZeroCategoryCount
from .ingestion import (
    CATEGORIES,
    DatasetStats,
    Manifest,
    ScanRecord,
    dataset_stats,
    list_slice_files,
    assemble_volume,
    load_manifest,
)
from .loss_metrics import inverse_frequency_weights, uniform_weights
from .lung_trim import TrimParams, apply_trim, detect_lung_range
from .resample import TargetShape, normalize_unit, resize_trilinear
from .volume import save_volume

STAGES = ("assemble", "trim", "resize", "normalize", "augment", "write")


@dataclass
class PipelineConfig:
    manifest: Path
    out_dir: Path
    trim: TrimParams = TrimParams()
    target: TargetShape = TargetShape()
    augment: bool = False
    augment_params: AugmentParams = AugmentParams()
    epoch: int = 0
    weight_scheme: str = "inverse_frequency"
    workers: int = 1
    seed: int = 0
    normalize_before_resize: bool = False

    def __post_init__(self):
        self.manifest = Path(self.manifest)
        self.out_dir = Path(self.out_dir)
        if self.workers < 1:
            raise ValueError("workers must be >= 1")

    @classmethod
    def from_json_dict(cls, payload: dict) -> "PipelineConfig":
        kwargs = dict(payload)
        if "trim" in kwargs:
            kwargs["trim"] = TrimParams(**kwargs["trim"])
        if "target" in kwargs:
            kwargs["target"] = TargetShape(**kwargs["target"])
        if "augment_params" in kwargs:
            aug = dict(kwargs["augment_params"])
            for key in ("crop_scale_range", "rotation_range_deg", "contrast_factor_range"):
                if key in aug:
                    aug[key] = tuple(aug[key])
            kwargs["augment_params"] = AugmentParams(**aug)
        return cls(**kwargs)

    def to_json_dict(self) -> dict:
        return {
            "manifest": str(self.manifest),
            "out_dir": str(self.out_dir),
            "trim": {
                "air_fraction_threshold": self.trim.air_fraction_threshold,
                "intensity_air_cutoff": self.trim.intensity_air_cutoff,
                "min_run": self.trim.min_run,
            },
            "target": {"d": self.target.d, "h": self.target.h, "w": self.target.w},
            "augment": self.augment,
            "augment_params": {
                "crop_scale_range": list(self.augment_params.crop_scale_range),
                "depth_crop": self.augment_params.depth_crop,
                "rotation_range_deg": list(self.augment_params.rotation_range_deg),
                "brightness_delta_max": self.augment_params.brightness_delta_max,
                "contrast_factor_range": list(self.augment_params.contrast_factor_range),
                "seed": self.augment_params.seed,
            },
            "epoch": self.epoch,
            "weight_scheme": self.weight_scheme,
            "workers": self.workers,
            "seed": self.seed,
            "normalize_before_resize": self.normalize_before_resize,
        }


@dataclass
class RunReport:
    scans: list[dict]
    stats: DatasetStats
    weights: dict | None
    wall_clock_s: float
    workers: int
    config: dict = field(default_factory=dict)

    @property
    def failed(self) -> list[dict]:
        return [s for s in self.scans if s["status"] != "ok"]

    def to_json_dict(self) -> dict:
        return {
            "config": self.config,
            "workers": self.workers,
            "wall_clock_s": self.wall_clock_s,
            "scans": self.scans,
            "stats": self.stats.to_json_dict(),
            "weights": self.weights,
        }


def _resolve_scan_dir(record: ScanRecord, config: PipelineConfig) -> Path:
    path = Path(record.path)
    if not path.is_absolute():
        path = config.manifest.parent / path
    return path


def process_scan(record: ScanRecord, config: PipelineConfig) -> dict:
    """Run all stages for one scan; never raises for per-scan failures."""
    timings: dict[str, float] = {}
    result = {
        "scan_id": record.scan_id,
        "status": "ok",
        "error": None,
        "trim_range": None,
        "timings": timings,
        "output": None,
    }
    try:
        t0 = time.perf_counter()
        files = list_slice_files(_resolve_scan_dir(record, config))
        volume = assemble_volume(files)
        timings["assemble"] = time.perf_counter() - t0

        t0 = time.perf_counter()
        trim = detect_lung_range(volume, config.trim)
        volume = apply_trim(volume, trim)
        result["trim_range"] = {"d_lo": trim.d_lo, "d_hi": trim.d_hi}
        timings["trim"] = time.perf_counter() - t0

        if config.normalize_before_resize:
            t0 = time.perf_counter()
            volume = normalize_unit(volume)
            timings["normalize"] = time.perf_counter() - t0
            t0 = time.perf_counter()
            volume = resize_trilinear(volume, config.target)
            timings["resize"] = time.perf_counter() - t0
        else:
            t0 = time.perf_counter()
            volume = resize_trilinear(volume, config.target)
            timings["resize"] = time.perf_counter() - t0
            t0 = time.perf_counter()
            volume = normalize_unit(volume)
            timings["normalize"] = time.perf_counter() - t0

        if config.augment:
            t0 = time.perf_counter()
            params = replace(config.augment_params, seed=config.seed)
            volume, _ = augment_pipeline(volume, params, record.scan_id, config.epoch)
            timings["augment"] = time.perf_counter() - t0

        t0 = time.perf_counter()
        npy_path, _ = save_volume(volume, config.out_dir / f"{record.scan_id}.npy", record.scan_id)
        timings["write"] = time.perf_counter() - t0
        result["output"] = str(npy_path)
    except (CTPipeError, ValueError, OSError) as exc:
        result["status"] = "failed"
        result["error"] = f"{type(exc).__name__}: {exc}"
    return result


def derive_weights(manifest: Manifest, scheme: str, split: str = "train") -> dict:
    """Category weights from manifest counts, JSON-ready."""
    counts = {label: 0 for label in CATEGORIES}
    for rec in manifest:
        if split == "all" or rec.split == split:
            counts[rec.label] += 1
    if scheme == "uniform":
        weights = uniform_weights()
        return {
            "scheme": weights.scheme,
            "counts": counts,
            "weights": {label: 1.0 for label in CATEGORIES},
        }
    derived = inverse_frequency_weights([counts[label] for label in CATEGORIES])
    return {
        "scheme": derived.scheme,
        "counts": counts,
        "weights": dict(zip(CATEGORIES, derived.weights)),
    }


def run_pipeline(config: PipelineConfig) -> RunReport:
    """Process every manifest record and write run_report.json alongside outputs."""
    started = time.perf_counter()
    manifest = load_manifest(config.manifest)
    config.out_dir.mkdir(parents=True, exist_ok=True)

    worker = partial(process_scan, config=config)
    if config.workers == 1 or len(manifest) <= 1:
        scans = [worker(rec) for rec in manifest]
    else:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            scans = list(pool.map(worker, manifest.records))

    stats = dataset_stats(manifest)
    try:
        weights = derive_weights(manifest, config.weight_scheme)
    except ZeroCategoryCount:
        weights = None

    report = RunReport(
        scans=scans,
        stats=stats,
        weights=weights,
        wall_clock_s=time.perf_counter() - started,
        workers=config.workers,
        config=config.to_json_dict(),
    )
    report_path = config.out_dir / "run_report.json"
    report_path.write_text(json.dumps(report.to_json_dict(), indent=2) + "\n", encoding="utf-8")
    return report
