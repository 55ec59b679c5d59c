"""Trilinear resizing to a fixed grid and unit-interval normalization.

Coordinate mapping uses the align-centers convention

    src = (dst + 0.5) * (src_size / dst_size) - 0.5

clamped to [0, src_size - 1], so resizing to the source shape is the
identity on grid points. Interpolation is separable (one linear pass per
axis) and accumulates in float64 before casting back to float32, keeping
the result within a few output ulps of the exact trilinear value.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidTarget
from .volume import INTENSITY_UNIT, Volume


@dataclass(frozen=True)
class TargetShape:
    d: int = 64
    h: int = 256
    w: int = 256

    def __post_init__(self):
        if min(self.d, self.h, self.w) < 1:
            raise InvalidTarget(f"target shape ({self.d}, {self.h}, {self.w})")

    def as_tuple(self) -> tuple[int, int, int]:
        return (self.d, self.h, self.w)


def axis_coordinates(src_size: int, dst_size: int) -> np.ndarray:
    """Clamped align-centers source coordinate of each output index."""
    dst = np.arange(dst_size, dtype=np.float64)
    src = (dst + 0.5) * (src_size / dst_size) - 0.5
    return np.clip(src, 0.0, float(src_size - 1))


def linear_resample_axis(data: np.ndarray, axis: int, dst_size: int) -> np.ndarray:
    """Linearly resample one axis; returns float64 regardless of input dtype."""
    src_size = data.shape[axis]
    src = axis_coordinates(src_size, dst_size)
    lo = np.floor(src).astype(np.intp)
    hi = np.minimum(lo + 1, src_size - 1)
    frac = src - lo

    shape = [1] * data.ndim
    shape[axis] = dst_size
    frac = frac.reshape(shape)
    lower = np.take(data, lo, axis=axis).astype(np.float64, copy=False)
    upper = np.take(data, hi, axis=axis).astype(np.float64, copy=False)
    return lower + frac * (upper - lower)


def resize_trilinear(volume: Volume, target: TargetShape) -> Volume:
    """Resize to ``target``; axes already at target size are left untouched."""
    data: np.ndarray = volume.data
    for axis, dst_size in enumerate(target.as_tuple()):
        if data.shape[axis] != dst_size:
            data = linear_resample_axis(data, axis, dst_size)
    if data is volume.data:
        return volume.copy()
    out = data.astype(np.float32)
    if volume.intensity_domain == INTENSITY_UNIT:
        # interpolation of [0, 1] values is convex; clip sub-ulp rounding spill
        np.clip(out, 0.0, 1.0, out=out)
    return Volume(out, volume.intensity_domain)


def normalize_unit(volume: Volume) -> Volume:
    """Map intensities affinely onto [0, 1]; constant volumes become zeros.

    Non-constant input attains 0 and 1 exactly. The degenerate all-zero
    convention keeps unattended cohort runs alive on blank scans.
    """
    data = volume.data.astype(np.float64)
    vmin = data.min()
    vmax = data.max()
    if vmax == vmin:
        out = np.zeros_like(data, dtype=np.float32)
    else:
        out = ((data - vmin) / (vmax - vmin)).astype(np.float32)
    return Volume(out, INTENSITY_UNIT)
