"""The central 3D volume type and its on-disk format.

A volume is a dense float32 grid of shape (D, H, W): D transverse slices
of H rows by W columns. ``intensity_domain`` records whether values are
guaranteed to lie in [0, 1] ("unit") or are still raw scanner values
("raw").

On disk a volume is an NPY file (format 1.0, little-endian float32,
C order) plus a JSON sidecar ``{scan_id, shape, intensity_domain}``
stored next to it with the same stem.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DecodeError

INTENSITY_RAW = "raw"
INTENSITY_UNIT = "unit"


@dataclass
class Volume:
    data: np.ndarray
    intensity_domain: str = INTENSITY_RAW

    def __post_init__(self):
        self.data = np.ascontiguousarray(self.data, dtype=np.float32)
        if self.data.ndim != 3:
            raise ValueError(f"volume data must be 3D, got ndim={self.data.ndim}")
        if min(self.data.shape) < 1:
            raise ValueError(f"volume dimensions must be >= 1, got {self.data.shape}")
        if self.intensity_domain not in (INTENSITY_RAW, INTENSITY_UNIT):
            raise ValueError(f"unknown intensity_domain {self.intensity_domain!r}")
        if self.intensity_domain == INTENSITY_UNIT:
            lo = float(self.data.min())
            hi = float(self.data.max())
            if lo < 0.0 or hi > 1.0:
                raise ValueError(
                    f"unit-domain volume has values outside [0, 1]: [{lo}, {hi}]"
                )

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.data.shape  # type: ignore[return-value]

    def copy(self) -> "Volume":
        return Volume(self.data.copy(), self.intensity_domain)


def sidecar_path(npy_path) -> Path:
    return Path(npy_path).with_suffix(".json")


def save_volume(volume: Volume, npy_path, scan_id: str) -> tuple[Path, Path]:
    """Write ``volume`` as NPY plus JSON sidecar; returns both paths."""
    npy_path = Path(npy_path)
    npy_path.parent.mkdir(parents=True, exist_ok=True)
    np.save(npy_path, volume.data)
    meta = {
        "scan_id": scan_id,
        "shape": list(volume.shape),
        "intensity_domain": volume.intensity_domain,
    }
    json_path = sidecar_path(npy_path)
    json_path.write_text(json.dumps(meta, indent=2) + "\n", encoding="utf-8")
    return npy_path, json_path


def load_volume(npy_path) -> tuple[Volume, str]:
    """Read an NPY + sidecar pair; returns (volume, scan_id)."""
    npy_path = Path(npy_path)
    try:
        data = np.load(npy_path, allow_pickle=False)
    except (OSError, ValueError) as exc:
        raise DecodeError(npy_path, str(exc)) from exc
    json_path = sidecar_path(npy_path)
    if not json_path.exists():
        raise DecodeError(npy_path, f"missing sidecar {json_path.name}")
    meta = json.loads(json_path.read_text(encoding="utf-8"))
    domain = meta.get("intensity_domain", INTENSITY_RAW)
    volume = Volume(data, domain)
    if list(volume.shape) != list(meta.get("shape", volume.shape)):
        raise DecodeError(npy_path, "sidecar shape does not match array")
    return volume, str(meta.get("scan_id", npy_path.stem))
