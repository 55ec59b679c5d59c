"""Slice-series assembly, manifest parsing, and dataset statistics.

A scan arrives as a directory of grayscale PNG slices (8- or 16-bit).
Slices stack along the depth axis in caller-supplied order; pixel values
are widened to float32 without rescaling so assembly is lossless.

Manifests are UTF-8 CSV files with header ``scan_id,path,label,sex,split``
listing one scan per row. The four diagnostic categories are fixed:
adenocarcinoma (A), squamous cell carcinoma (G), COVID-19 (Covid), and
healthy (Normal).
"""

from __future__ import annotations

import csv
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, Sequence

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import (
    DecodeError,
    DuplicateId,
    EmptySeries,
    InconsistentSlices,
    SchemaError,
)
from .volume import INTENSITY_RAW, Volume

CATEGORIES = ("A", "G", "Covid", "Normal")
SEXES = ("female", "male")
SPLITS = ("train", "val")

MANIFEST_HEADER = ("scan_id", "path", "label", "sex", "split")

# PIL modes accepted as single-channel grayscale at 8 or 16 bits.
_GRAYSCALE_MODES = ("L", "I", "I;16", "I;16B", "I;16L", "I;16N")


@dataclass(frozen=True)
class ScanRecord:
    scan_id: str
    path: str
    label: str
    sex: str
    split: str


@dataclass
class Manifest:
    records: list[ScanRecord]

    def __post_init__(self):
        seen: set[str] = set()
        for rec in self.records:
            if rec.scan_id in seen:
                raise DuplicateId(rec.scan_id)
            seen.add(rec.scan_id)

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self) -> Iterator[ScanRecord]:
        return iter(self.records)


@dataclass
class DatasetStats:
    """Scan counts keyed (split, label, sex), with per-(split, sex) totals."""

    counts: dict[tuple[str, str, str], int]
    totals: dict[tuple[str, str], int]

    def to_json_dict(self) -> dict:
        counts = {
            split: {
                label: {sex: self.counts[(split, label, sex)] for sex in SEXES}
                for label in CATEGORIES
            }
            for split in SPLITS
        }
        totals = {
            split: {sex: self.totals[(split, sex)] for sex in SEXES}
            for split in SPLITS
        }
        return {"counts": counts, "totals": totals}


def load_slice(path) -> np.ndarray:
    """Decode one grayscale PNG slice to a float32 (H, W) array, unscaled."""
    path = Path(path)
    try:
        with Image.open(path) as img:
            if img.mode not in _GRAYSCALE_MODES:
                raise DecodeError(path, f"unsupported mode {img.mode!r}")
            arr = np.asarray(img)
    except UnidentifiedImageError as exc:
        raise DecodeError(path, "not a readable image") from exc
    except OSError as exc:
        raise DecodeError(path, str(exc)) from exc
    if arr.ndim != 2:
        raise DecodeError(path, f"expected single channel, got shape {arr.shape}")
    return arr.astype(np.float32)


def assemble_volume(slice_paths: Sequence) -> Volume:
    """Stack slices into a raw-domain volume, in the given order.

    All slices must decode to the same (H, W). Values are cast to float32
    without any rescaling (an 8-bit 255 stays 255.0).
    """
    if len(slice_paths) == 0:
        raise EmptySeries("no slice paths given")
    first = load_slice(slice_paths[0])
    data = np.empty((len(slice_paths),) + first.shape, dtype=np.float32)
    data[0] = first
    for i, path in enumerate(slice_paths[1:], start=1):
        arr = load_slice(path)
        if arr.shape != first.shape:
            raise InconsistentSlices(i, first.shape, arr.shape)
        data[i] = arr
    return Volume(data, INTENSITY_RAW)


def natural_key(name: str) -> tuple:
    """Sort key ordering embedded integers numerically (slice_2 < slice_10)."""
    parts = re.split(r"(\d+)", name)
    return tuple(int(p) if p.isdigit() else p for p in parts)


def list_slice_files(directory) -> list[Path]:
    """PNG files of one scan directory in natural numeric order."""
    directory = Path(directory)
    files = [p for p in directory.iterdir() if p.suffix.lower() == ".png"]
    return sorted(files, key=lambda p: natural_key(p.name))


def load_manifest(path) -> Manifest:
    """Parse a manifest CSV, preserving row order."""
    path = Path(path)
    records: list[ScanRecord] = []
    seen: set[str] = set()
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(0, "empty file, expected header") from None
        if tuple(h.strip() for h in header) != MANIFEST_HEADER:
            raise SchemaError(0, f"bad header {header!r}")
        for row_num, row in enumerate(reader, start=1):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != 5:
                raise SchemaError(row_num, f"expected 5 fields, got {len(row)}")
            scan_id, scan_path, label, sex, split = (f.strip() for f in row)
            if not scan_id:
                raise SchemaError(row_num, "empty scan_id")
            if label not in CATEGORIES:
                raise SchemaError(row_num, f"unknown label {label!r}")
            if sex not in SEXES:
                raise SchemaError(row_num, f"unknown sex {sex!r}")
            if split not in SPLITS:
                raise SchemaError(row_num, f"unknown split {split!r}")
            if scan_id in seen:
                raise DuplicateId(scan_id)
            seen.add(scan_id)
            records.append(ScanRecord(scan_id, scan_path, label, sex, split))
    return Manifest(records)


def dataset_stats(manifest: Manifest) -> DatasetStats:
    """Count records per (split, label, sex); zero cells are included."""
    counts = {
        (split, label, sex): 0
        for split in SPLITS
        for label in CATEGORIES
        for sex in SEXES
    }
    for rec in manifest:
        counts[(rec.split, rec.label, rec.sex)] += 1
    totals = {
        (split, sex): sum(counts[(split, label, sex)] for label in CATEGORIES)
        for split in SPLITS
        for sex in SEXES
    }
    return DatasetStats(counts, totals)
