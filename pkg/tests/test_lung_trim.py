import numpy as np
import pytest

from ctpipe.errors import OutOfRange
from ctpipe.lung_trim import (
    TrimParams,
    TrimRange,
    apply_trim,
    detect_lung_range,
    slice_air_fraction,
    slice_air_fractions,
)
from ctpipe.volume import Volume

from conftest import planted_band_volume


def band_volume(depth, band, air_fraction, height=4, width=4):
    """Deterministic two-level volume with a fixed air fraction inside ``band``."""
    data = np.full((depth, height, width), 200.0, dtype=np.float32)
    n_air = round(air_fraction * height * width)
    lo, hi = band
    for d in range(lo, hi + 1):
        data[d].reshape(-1)[:n_air] = 0.0
    return Volume(data)


class TestSliceAirFraction:
    def test_all_vmin_slice(self):
        volume = band_volume(3, (1, 1), air_fraction=1.0)
        assert slice_air_fraction(volume, 1, 0.15) == 1.0

    def test_all_vmax_slice(self):
        volume = band_volume(3, (1, 1), air_fraction=1.0)
        assert slice_air_fraction(volume, 0, 0.15) == 0.0

    def test_quarter_air_slice(self):
        # 4x4 slice with 4 voxels at vmin and 12 at vmax: 4/16 voxels counted
        volume = band_volume(3, (1, 1), air_fraction=0.25)
        assert slice_air_fraction(volume, 1, 0.15) == pytest.approx(0.25, abs=0)

    def test_constant_volume_convention(self):
        volume = Volume(np.full((5, 4, 4), 7.0, dtype=np.float32))
        assert slice_air_fraction(volume, 2, 0.15) == 1.0
        assert np.all(slice_air_fractions(volume, 0.15) == 1.0)

    def test_out_of_range(self):
        volume = band_volume(3, (1, 1), 0.5)
        with pytest.raises(OutOfRange):
            slice_air_fraction(volume, 3, 0.15)
        with pytest.raises(OutOfRange):
            slice_air_fraction(volume, -1, 0.15)

    def test_cutoff_line_position(self):
        # values 0 and 100 with a mid voxel at 10: cutoff 0.15 puts the line at 15
        data = np.full((1, 2, 2), 100.0, dtype=np.float32)
        data[0, 0, 0] = 0.0
        data[0, 0, 1] = 10.0
        volume = Volume(data)
        assert slice_air_fraction(volume, 0, 0.15) == pytest.approx(0.5)
        assert slice_air_fraction(volume, 0, 0.05) == pytest.approx(0.25)


class TestDetectLungRange:
    def test_planted_band_recovered(self):
        # brute-force expectation: slices 20..79 are the only ones above threshold
        volume = band_volume(100, (20, 79), air_fraction=0.5)
        fractions = slice_air_fractions(volume, 0.15)
        expected = [d for d in range(100) if fractions[d] >= 0.3]
        assert expected == list(range(20, 80))
        params = TrimParams(air_fraction_threshold=0.3, intensity_air_cutoff=0.15, min_run=8)
        assert detect_lung_range(volume, params) == TrimRange(20, 79)

    def test_fail_open_when_nothing_qualifies(self):
        volume = band_volume(30, (0, 29), air_fraction=0.0)
        params = TrimParams(air_fraction_threshold=0.3)
        assert detect_lung_range(volume, params) == TrimRange(0, 29)

    def test_tie_break_toward_smaller_start(self):
        # two equal 10-slice runs; exhaustive enumeration says both qualify
        data = np.full((50, 4, 4), 200.0, dtype=np.float32)
        for d in list(range(10, 20)) + list(range(30, 40)):
            data[d].reshape(-1)[:8] = 0.0
        volume = Volume(data)
        params = TrimParams(air_fraction_threshold=0.3, min_run=8)
        assert detect_lung_range(volume, params) == TrimRange(10, 19)

    def test_longest_run_beats_earlier_short_run(self):
        data = np.full((50, 4, 4), 200.0, dtype=np.float32)
        for d in list(range(2, 12)) + list(range(20, 45)):
            data[d].reshape(-1)[:8] = 0.0
        volume = Volume(data)
        params = TrimParams(air_fraction_threshold=0.3, min_run=8)
        assert detect_lung_range(volume, params) == TrimRange(20, 44)

    def test_min_run_filters_short_bands(self):
        volume = band_volume(40, (5, 8), air_fraction=0.5)  # 4-slice band
        params = TrimParams(air_fraction_threshold=0.3, min_run=8)
        assert detect_lung_range(volume, params) == TrimRange(0, 39)

    def test_single_slice_volume(self):
        volume = Volume(np.zeros((1, 4, 4), dtype=np.float32))
        assert detect_lung_range(volume, TrimParams(min_run=1)) == TrimRange(0, 0)


class TestApplyTrim:
    def test_shape_arithmetic(self):
        volume = Volume(np.zeros((100, 4, 4), dtype=np.float32))
        assert apply_trim(volume, TrimRange(20, 79)).shape == (60, 4, 4)

    def test_full_range_is_identity(self):
        rng = np.random.default_rng(3)
        volume = Volume(rng.uniform(size=(10, 4, 4)).astype(np.float32))
        out = apply_trim(volume, TrimRange(0, 9))
        assert np.array_equal(out.data, volume.data)
        assert out.intensity_domain == volume.intensity_domain

    def test_single_slice(self):
        rng = np.random.default_rng(4)
        volume = Volume(rng.uniform(size=(10, 4, 4)).astype(np.float32))
        out = apply_trim(volume, TrimRange(5, 5))
        assert out.shape == (1, 4, 4)
        assert np.array_equal(out.data[0], volume.data[5])

    def test_invalid_range(self):
        volume = Volume(np.zeros((10, 4, 4), dtype=np.float32))
        with pytest.raises(OutOfRange):
            apply_trim(volume, TrimRange(5, 10))
        with pytest.raises(OutOfRange):
            TrimRange(7, 3)


class TestProperties:
    def test_trim_of_detection_preserves_voxels(self):
        rng = np.random.default_rng(5)
        for _ in range(20):
            volume, lo, hi = planted_band_volume(rng)
            trim = detect_lung_range(volume, TrimParams(min_run=2))
            out = apply_trim(volume, trim)
            assert out.shape[0] <= volume.shape[0]
            assert np.array_equal(out.data, volume.data[trim.d_lo : trim.d_hi + 1])

    def test_affine_rescaling_invariance(self):
        # air fractions depend only on relative position inside [vmin, vmax]
        rng = np.random.default_rng(6)
        for _ in range(20):
            data = rng.uniform(0, 500, size=(30, 6, 6)).astype(np.float32)
            volume = Volume(data)
            scaled = Volume((data.astype(np.float64) * 3.5 + 120.0).astype(np.float32))
            params = TrimParams(min_run=1)
            assert detect_lung_range(volume, params) == detect_lung_range(scaled, params)

    def test_monotone_rescaling_invariance_on_two_level_volumes(self):
        rng = np.random.default_rng(7)
        for transform in (np.sqrt, np.cbrt, lambda x: np.log1p(x), lambda x: x**3):
            volume, lo, hi = planted_band_volume(rng, tissue_value=180.0)
            mapped = Volume(transform(volume.data.astype(np.float64)).astype(np.float32))
            params = TrimParams(min_run=2)
            assert detect_lung_range(volume, params) == detect_lung_range(mapped, params)

    def test_idempotent_when_all_remaining_slices_qualify(self):
        rng = np.random.default_rng(8)
        volume, lo, hi = planted_band_volume(rng, depth=40)
        params = TrimParams(min_run=2)
        trimmed = apply_trim(volume, detect_lung_range(volume, params))
        again = detect_lung_range(trimmed, params)
        assert again == TrimRange(0, trimmed.shape[0] - 1)
