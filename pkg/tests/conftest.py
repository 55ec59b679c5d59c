"""Shared synthetic-data helpers for the test suite."""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np
from PIL import Image

from ctpipe.ingestion import Manifest, ScanRecord
from ctpipe.volume import INTENSITY_UNIT, Volume

# Published challenge statistics: (female, male) scans per (split, label).
TABLE1 = {
    "train": {"A": (125, 125), "Covid": (100, 100), "G": (5, 79), "Normal": (100, 100)},
    "val": {"A": (25, 25), "Covid": (20, 20), "G": (13, 12), "Normal": (20, 20)},
}
TABLE1_TOTALS = {"train": (330, 404), "val": (78, 77)}


def table1_records() -> list[ScanRecord]:
    records = []
    i = 0
    for split, cells in TABLE1.items():
        for label, (female, male) in cells.items():
            for sex, count in (("female", female), ("male", male)):
                for _ in range(count):
                    records.append(
                        ScanRecord(f"s{i:04d}", f"vols/s{i:04d}", label, sex, split)
                    )
                    i += 1
    return records


def table1_manifest() -> Manifest:
    return Manifest(table1_records())


def write_manifest_csv(path: Path, records) -> Path:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["scan_id", "path", "label", "sex", "split"])
        for rec in records:
            writer.writerow([rec.scan_id, rec.path, rec.label, rec.sex, rec.split])
    return Path(path)


def write_png_series(directory: Path, slices, bitdepth: int = 8) -> list[Path]:
    """One PNG per (H, W) slice array, named with natural-sortable suffixes."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = []
    for i, arr in enumerate(slices):
        if bitdepth == 8:
            img = Image.fromarray(np.asarray(arr, dtype=np.uint8))
        elif bitdepth == 16:
            img = Image.fromarray(np.asarray(arr, dtype=np.uint16))
        else:
            raise ValueError(f"bitdepth {bitdepth}")
        path = directory / f"slice_{i}.png"
        img.save(path)
        paths.append(path)
    return paths


def planted_band_volume(
    rng: np.random.Generator,
    depth: int = 40,
    height: int = 12,
    width: int = 12,
    band: tuple[int, int] | None = None,
    air_fraction: float = 0.5,
    air_value: float = 0.0,
    tissue_value: float = 200.0,
) -> tuple[Volume, int, int]:
    """Two-level volume: slices inside the band hold ``air_fraction`` air voxels.

    Two intensity levels keep the air/tissue split invariant under any
    strictly monotone increasing intensity map, so detection results can
    be compared bitwise across rescalings.
    """
    if band is None:
        lo = int(rng.integers(0, depth // 3))
        hi = int(rng.integers(2 * depth // 3, depth))
    else:
        lo, hi = band
    data = np.full((depth, height, width), tissue_value, dtype=np.float32)
    n_air = max(1, round(air_fraction * height * width))
    for d in range(lo, hi + 1):
        flat = rng.permutation(height * width)[:n_air]
        plane = data[d].reshape(-1)
        plane[flat] = air_value
    return Volume(data), lo, hi


def random_unit_volume(rng: np.random.Generator, shape=(8, 10, 10)) -> Volume:
    data = rng.uniform(0.0, 1.0, size=shape).astype(np.float32)
    # pin the extremes so the volume is exactly unit-spanning
    data.reshape(-1)[0] = 0.0
    data.reshape(-1)[-1] = 1.0
    return Volume(data, INTENSITY_UNIT)
