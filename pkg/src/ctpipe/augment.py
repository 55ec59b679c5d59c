"""Seed-driven training-time augmentations for unit-domain volumes.

Four transforms are applied in a fixed order: random resized crop on the
transverse plane, random crop along the depth axis to a fixed slice
count, in-plane rotation, and intensity (brightness/contrast) jitter.

Randomness comes from a counter-based Philox stream keyed by
``(seed, scan_id, epoch)``, so an item's augmentation is independent of
batch order, worker count, and thread schedule. Every sampled value is
recorded in a DrawLog; replaying a log through the deterministic cores
reproduces the augmented volume bitwise.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import asdict, dataclass

import numpy as np

from .resample import linear_resample_axis
from .volume import INTENSITY_UNIT, Volume


@dataclass(frozen=True)
class AugmentParams:
    crop_scale_range: tuple[float, float] = (0.7, 1.0)
    depth_crop: int = 64
    rotation_range_deg: tuple[float, float] = (-10.0, 10.0)
    brightness_delta_max: float = 0.1
    contrast_factor_range: tuple[float, float] = (0.9, 1.1)
    seed: int = 0

    def __post_init__(self):
        lo, hi = self.crop_scale_range
        if not 0.0 < lo <= hi <= 1.0:
            raise ValueError(f"crop_scale_range {self.crop_scale_range} not in (0, 1]")
        if self.depth_crop < 1:
            raise ValueError("depth_crop must be >= 1")
        rlo, rhi = self.rotation_range_deg
        if rlo != -rhi:
            raise ValueError(f"rotation range {self.rotation_range_deg} must be symmetric")
        if self.brightness_delta_max < 0.0:
            raise ValueError("brightness_delta_max must be >= 0")
        clo, chi = self.contrast_factor_range
        if not clo <= 1.0 <= chi:
            raise ValueError(f"contrast_factor_range {self.contrast_factor_range} must contain 1")
        if self.seed < 0:
            raise ValueError("seed must be a non-negative integer")


@dataclass
class DrawLog:
    """Sampled values of one augmentation run, sufficient for bitwise replay."""

    crop_scale: float | None = None
    crop_rect: tuple[int, int, int, int] | None = None  # (row0, col0, height, width)
    depth_offset: int | None = None
    depth_count: int | None = None
    depth_pad: tuple[int, int] | None = None  # (front, back)
    angle_deg: float | None = None
    brightness_delta: float | None = None
    contrast_factor: float | None = None

    def merged_with(self, other: "DrawLog") -> "DrawLog":
        fields = asdict(self)
        for key, value in asdict(other).items():
            if value is not None:
                fields[key] = value
        return DrawLog(**{k: _detuple(k, v) for k, v in fields.items()})

    def to_json_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_json_dict(cls, payload: dict) -> "DrawLog":
        return cls(**{k: _detuple(k, payload.get(k)) for k in cls.__dataclass_fields__})


def _detuple(key: str, value):
    if value is not None and key in ("crop_rect", "depth_pad"):
        return tuple(value)
    return value


def derive_stream(seed: int, scan_id: str, epoch: int) -> np.random.Generator:
    """Counter-based generator keyed by (seed, scan_id, epoch)."""
    digest = hashlib.blake2b(scan_id.encode("utf-8"), digest_size=8).digest()
    id_word = int.from_bytes(digest, "little")
    ss = np.random.SeedSequence([int(seed), id_word, int(epoch)])
    return np.random.Generator(np.random.Philox(ss))


def _require_unit(volume: Volume, op: str) -> None:
    if volume.intensity_domain != INTENSITY_UNIT:
        raise ValueError(f"{op} requires a unit-domain volume; normalize first")


def _finish_unit(data: np.ndarray) -> Volume:
    out = data.astype(np.float32)
    np.clip(out, 0.0, 1.0, out=out)
    return Volume(out, INTENSITY_UNIT)


# --- deterministic cores -------------------------------------------------

def crop_resize_transverse(volume: Volume, rect: tuple[int, int, int, int]) -> Volume:
    """Crop (row0, col0, height, width) from every slice, resize back to (H, W)."""
    depth, height, width = volume.shape
    r0, c0, ch, cw = rect
    if not (0 <= r0 and r0 + ch <= height and 0 <= c0 and c0 + cw <= width):
        raise ValueError(f"crop rect {rect} outside slice ({height}, {width})")
    if ch < 1 or cw < 1:
        raise ValueError(f"crop rect {rect} is empty")
    patch = volume.data[:, r0 : r0 + ch, c0 : c0 + cw]
    data: np.ndarray = patch
    if ch != height:
        data = linear_resample_axis(data, 1, height)
    if cw != width:
        data = linear_resample_axis(data, 2, width)
    if data is patch:
        return Volume(patch.copy(), volume.intensity_domain)
    if volume.intensity_domain == INTENSITY_UNIT:
        return _finish_unit(data)
    return Volume(data.astype(np.float32), volume.intensity_domain)


def crop_depth(volume: Volume, offset: int, depth_crop: int) -> Volume:
    if offset < 0 or offset + depth_crop > volume.shape[0]:
        raise ValueError(f"depth crop [{offset}, {offset + depth_crop}) outside volume")
    return Volume(volume.data[offset : offset + depth_crop].copy(), volume.intensity_domain)


def pad_depth(volume: Volume, front: int, back: int) -> Volume:
    if front < 0 or back < 0:
        raise ValueError("pad amounts must be >= 0")
    if front == 0 and back == 0:
        return volume.copy()
    data = np.pad(volume.data, ((front, back), (0, 0), (0, 0)))
    return Volume(data, volume.intensity_domain)


def rotate_transverse(volume: Volume, angle_deg: float) -> Volume:
    """Rotate every slice about its center; out-of-bounds samples become 0.

    Positive angles move the +row axis toward the +col axis, so a 90 degree
    turn of a square slice equals ``np.rot90(slice, 1)``.
    """
    depth, height, width = volume.shape
    theta = math.radians(angle_deg)
    cos_t = math.cos(theta)
    sin_t = math.sin(theta)
    center_r = (height - 1) / 2.0
    center_c = (width - 1) / 2.0

    rows = np.arange(height, dtype=np.float64)[:, None] - center_r
    cols = np.arange(width, dtype=np.float64)[None, :] - center_c
    src_r = cos_t * rows + sin_t * cols + center_r
    src_c = -sin_t * rows + cos_t * cols + center_c

    valid = (src_r >= 0.0) & (src_r <= height - 1) & (src_c >= 0.0) & (src_c <= width - 1)
    src_r = np.clip(src_r, 0.0, height - 1)
    src_c = np.clip(src_c, 0.0, width - 1)
    r_lo = np.floor(src_r).astype(np.intp)
    c_lo = np.floor(src_c).astype(np.intp)
    r_hi = np.minimum(r_lo + 1, height - 1)
    c_hi = np.minimum(c_lo + 1, width - 1)
    fr = src_r - r_lo
    fc = src_c - c_lo

    data = volume.data
    top = data[:, r_lo, c_lo] + fc * (data[:, r_lo, c_hi] - data[:, r_lo, c_lo])
    bottom = data[:, r_hi, c_lo] + fc * (data[:, r_hi, c_hi] - data[:, r_hi, c_lo])
    out = top + fr * (bottom - top)
    out *= valid
    if volume.intensity_domain == INTENSITY_UNIT:
        return _finish_unit(out)
    return Volume(out.astype(np.float32), volume.intensity_domain)


def jitter_intensity(volume: Volume, brightness_delta: float, contrast_factor: float) -> Volume:
    """v -> clamp(f * (v - mean) + mean + b, 0, 1) with the whole-volume mean."""
    data = volume.data.astype(np.float64)
    mean = data.mean()
    out = contrast_factor * (data - mean) + mean + brightness_delta
    np.clip(out, 0.0, 1.0, out=out)
    return Volume(out.astype(np.float32), INTENSITY_UNIT)


# --- sampled transforms ---------------------------------------------------

def random_resized_crop_transverse(
    volume: Volume, params: AugmentParams, rng: np.random.Generator
) -> tuple[Volume, DrawLog]:
    """Crop a random sub-rectangle of every slice and resize it back to (H, W)."""
    _require_unit(volume, "random_resized_crop_transverse")
    _, height, width = volume.shape
    if height < 2 or width < 2:
        raise ValueError("transverse crop needs H, W >= 2")
    scale = float(rng.uniform(*params.crop_scale_range))
    side = math.sqrt(scale)
    ch = min(height, max(1, round(height * side)))
    cw = min(width, max(1, round(width * side)))
    r0 = int(rng.integers(0, height - ch + 1))
    c0 = int(rng.integers(0, width - cw + 1))
    rect = (r0, c0, ch, cw)
    return crop_resize_transverse(volume, rect), DrawLog(crop_scale=scale, crop_rect=rect)


def random_depth_crop(
    volume: Volume, params: AugmentParams, rng: np.random.Generator
) -> tuple[Volume, DrawLog]:
    """Keep ``depth_crop`` contiguous slices, padding short volumes with zeros."""
    depth = volume.shape[0]
    if depth > params.depth_crop:
        offset = int(rng.integers(0, depth - params.depth_crop + 1))
        out = crop_depth(volume, offset, params.depth_crop)
        return out, DrawLog(depth_offset=offset, depth_count=params.depth_crop)
    front = (params.depth_crop - depth) // 2
    back = params.depth_crop - depth - front  # odd remainder goes to the back
    return pad_depth(volume, front, back), DrawLog(depth_pad=(front, back))


def random_rotation_transverse(
    volume: Volume, params: AugmentParams, rng: np.random.Generator
) -> tuple[Volume, DrawLog]:
    _require_unit(volume, "random_rotation_transverse")
    angle = float(rng.uniform(*params.rotation_range_deg))
    return rotate_transverse(volume, angle), DrawLog(angle_deg=angle)


def color_jitter(
    volume: Volume, params: AugmentParams, rng: np.random.Generator
) -> tuple[Volume, DrawLog]:
    """Brightness/contrast jitter, the photometric axes meaningful for CT."""
    _require_unit(volume, "color_jitter")
    delta = float(rng.uniform(-params.brightness_delta_max, params.brightness_delta_max))
    factor = float(rng.uniform(*params.contrast_factor_range))
    out = jitter_intensity(volume, delta, factor)
    return out, DrawLog(brightness_delta=delta, contrast_factor=factor)


def augment_pipeline(
    volume: Volume, params: AugmentParams, scan_id: str, epoch: int
) -> tuple[Volume, DrawLog]:
    """All four transforms in order; output shape is (depth_crop, H, W)."""
    _require_unit(volume, "augment_pipeline")
    rng = derive_stream(params.seed, scan_id, epoch)
    log = DrawLog()
    out, drawn = random_resized_crop_transverse(volume, params, rng)
    log = log.merged_with(drawn)
    out, drawn = random_depth_crop(out, params, rng)
    log = log.merged_with(drawn)
    out, drawn = random_rotation_transverse(out, params, rng)
    log = log.merged_with(drawn)
    out, drawn = color_jitter(out, params, rng)
    return out, log.merged_with(drawn)


def replay(volume: Volume, log: DrawLog) -> Volume:
    """Re-apply a recorded DrawLog through the deterministic cores.

    Stages whose fields are absent from the log are skipped; present
    stages run in pipeline order.
    """
    out = volume
    if log.crop_rect is not None:
        out = crop_resize_transverse(out, log.crop_rect)
    if log.depth_offset is not None:
        out = crop_depth(out, log.depth_offset, log.depth_count or out.shape[0])
    elif log.depth_pad is not None:
        out = pad_depth(out, *log.depth_pad)
    if log.angle_deg is not None:
        out = rotate_transverse(out, log.angle_deg)
    if log.brightness_delta is not None or log.contrast_factor is not None:
        out = jitter_intensity(
            out, log.brightness_delta or 0.0, 1.0 if log.contrast_factor is None else log.contrast_factor
        )
    return out
