"""Removal of leading/trailing slices that contain no lung tissue.

Lungs are air-filled, so lung-bearing slices hold a markedly higher
fraction of low-intensity voxels than the neck slices at the start of a
series or the abdomen slices at the end. A slice's "air fraction" is the
share of its voxels at or below ``vmin + cutoff * (vmax - vmin)`` where
vmin/vmax are whole-volume extremes, so the measure depends only on each
voxel's relative position within the volume's intensity range.

Detection keeps the longest contiguous run of slices whose air fraction
clears a threshold and fails open to the full volume when nothing
qualifies: a weak heuristic must never destroy data in an unattended
batch run.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import OutOfRange
from .volume import Volume


@dataclass(frozen=True)
class TrimRange:
    """Inclusive slice interval [d_lo, d_hi] retained after trimming."""

    d_lo: int
    d_hi: int

    def __post_init__(self):
        if not (0 <= self.d_lo <= self.d_hi):
            raise OutOfRange(f"bad trim range [{self.d_lo}, {self.d_hi}]")

    def __len__(self) -> int:
        return self.d_hi - self.d_lo + 1


@dataclass(frozen=True)
class TrimParams:
    air_fraction_threshold: float = 0.08
    intensity_air_cutoff: float = 0.15
    min_run: int = 8

    def __post_init__(self):
        if not 0.0 <= self.air_fraction_threshold <= 1.0:
            raise ValueError("air_fraction_threshold must be in [0, 1]")
        if not 0.0 <= self.intensity_air_cutoff <= 1.0:
            raise ValueError("intensity_air_cutoff must be in [0, 1]")
        if self.min_run < 1:
            raise ValueError("min_run must be >= 1")


def slice_air_fractions(volume: Volume, intensity_air_cutoff: float) -> np.ndarray:
    """Air fraction of every slice; constant volumes are all 1.0."""
    data = volume.data
    vmin = float(data.min())
    vmax = float(data.max())
    if vmax == vmin:
        return np.ones(data.shape[0], dtype=np.float64)
    line = vmin + intensity_air_cutoff * (vmax - vmin)
    return (data <= line).mean(axis=(1, 2))


def slice_air_fraction(volume: Volume, d: int, intensity_air_cutoff: float = 0.15) -> float:
    """Air fraction of slice ``d`` against whole-volume extremes."""
    depth = volume.shape[0]
    if not 0 <= d < depth:
        raise OutOfRange(f"slice {d} outside [0, {depth - 1}]")
    data = volume.data
    vmin = float(data.min())
    vmax = float(data.max())
    if vmax == vmin:
        return 1.0
    line = vmin + intensity_air_cutoff * (vmax - vmin)
    return float((data[d] <= line).mean())


def detect_lung_range(volume: Volume, params: TrimParams | None = None) -> TrimRange:
    """Longest run of slices whose air fraction clears the threshold.

    Runs shorter than ``min_run`` never qualify; ties go to the run with
    the smaller starting index. With no qualifying run the full range is
    returned (fail-open).
    """
    if params is None:
        params = TrimParams()
    depth = volume.shape[0]
    fractions = slice_air_fractions(volume, params.intensity_air_cutoff)
    qualifies = fractions >= params.air_fraction_threshold

    best: TrimRange | None = None
    run_start = None
    for d in range(depth + 1):
        inside = d < depth and qualifies[d]
        if inside and run_start is None:
            run_start = d
        elif not inside and run_start is not None:
            length = d - run_start
            if length >= params.min_run and (best is None or length > len(best)):
                best = TrimRange(run_start, d - 1)
            run_start = None
    if best is None:
        return TrimRange(0, depth - 1)
    return best


def apply_trim(volume: Volume, trim: TrimRange) -> Volume:
    """Keep slices [d_lo, d_hi]; voxels are copied verbatim."""
    depth = volume.shape[0]
    if trim.d_hi >= depth:
        raise OutOfRange(f"trim range [{trim.d_lo}, {trim.d_hi}] exceeds D={depth}")
    return Volume(volume.data[trim.d_lo : trim.d_hi + 1].copy(), volume.intensity_domain)
