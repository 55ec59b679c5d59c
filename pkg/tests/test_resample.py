import numpy as np
import pytest

from ctpipe.errors import InvalidTarget
from ctpipe.resample import (
    TargetShape,
    axis_coordinates,
    normalize_unit,
    resize_trilinear,
)
from ctpipe.volume import INTENSITY_UNIT, Volume

from conftest import random_unit_volume


def linear_field(shape, coeffs=(0.0, 2.0, 3.0, 5.0)):
    """v(d, h, w) = c0 + c1*d + c2*h + c3*w sampled on the grid."""
    c0, c1, c2, c3 = coeffs
    d, h, w = np.meshgrid(
        np.arange(shape[0]), np.arange(shape[1]), np.arange(shape[2]), indexing="ij"
    )
    return (c0 + c1 * d + c2 * h + c3 * w).astype(np.float32)


class TestAxisCoordinates:
    def test_identity_on_equal_sizes(self):
        src = axis_coordinates(8, 8)
        assert np.array_equal(src, np.arange(8, dtype=np.float64))

    def test_clamped_to_grid(self):
        src = axis_coordinates(4, 16)
        assert src.min() >= 0.0
        assert src.max() <= 3.0


class TestResizeTrilinear:
    def test_identity_shape_is_bitwise(self):
        rng = np.random.default_rng(0)
        volume = Volume(rng.uniform(-50, 50, size=(5, 7, 9)).astype(np.float32))
        out = resize_trilinear(volume, TargetShape(5, 7, 9))
        assert np.array_equal(out.data, volume.data)
        assert out.data is not volume.data

    def test_constant_volume_any_target(self):
        volume = Volume(np.full((8, 8, 8), 7.0, dtype=np.float32))
        for target in (TargetShape(4, 4, 4), TargetShape(13, 3, 21), TargetShape(1, 1, 1)):
            out = resize_trilinear(volume, target)
            assert out.shape == target.as_tuple()
            assert np.all(out.data == 7.0)

    def test_linear_field_fixed_point(self):
        # oracle: evaluate the closed-form trilinear function at mapped coordinates
        coeffs = (0.0, 2.0, 3.0, 5.0)
        volume = Volume(linear_field((8, 8, 8), coeffs))
        out = resize_trilinear(volume, TargetShape(4, 4, 4))
        c0, c1, c2, c3 = coeffs
        sd = axis_coordinates(8, 4)
        sh = axis_coordinates(8, 4)
        sw = axis_coordinates(8, 4)
        expected = (
            c0
            + c1 * sd[:, None, None]
            + c2 * sh[None, :, None]
            + c3 * sw[None, None, :]
        )
        assert np.max(np.abs(out.data - expected)) <= 1e-5

    def test_linear_field_upsample_interior(self):
        coeffs = (1.0, -0.5, 0.25, 2.0)
        volume = Volume(linear_field((5, 6, 7), coeffs))
        out = resize_trilinear(volume, TargetShape(9, 11, 13))
        c0, c1, c2, c3 = coeffs
        sd = axis_coordinates(5, 9)
        sh = axis_coordinates(6, 11)
        sw = axis_coordinates(7, 13)
        expected = (
            c0
            + c1 * sd[:, None, None]
            + c2 * sh[None, :, None]
            + c3 * sw[None, None, :]
        )
        # clamp makes boundary samples exact too: the clamped coordinate is
        # where the interpolant is actually evaluated
        assert np.max(np.abs(out.data - expected)) <= 1e-5

    def test_single_axis_change_leaves_others_bitwise(self):
        rng = np.random.default_rng(1)
        volume = Volume(rng.uniform(0, 100, size=(6, 4, 4)).astype(np.float32))
        out = resize_trilinear(volume, TargetShape(3, 4, 4))
        assert out.shape == (3, 4, 4)

    def test_unit_domain_preserved_and_closed(self):
        rng = np.random.default_rng(2)
        volume = random_unit_volume(rng, shape=(6, 9, 9))
        out = resize_trilinear(volume, TargetShape(10, 5, 12))
        assert out.intensity_domain == INTENSITY_UNIT
        assert out.data.min() >= 0.0
        assert out.data.max() <= 1.0

    def test_invalid_target(self):
        with pytest.raises(InvalidTarget):
            TargetShape(0, 4, 4)


class TestNormalizeUnit:
    def test_affine_endpoints(self):
        volume = Volume(np.array([0.0, 50.0, 100.0], dtype=np.float32).reshape(1, 1, 3))
        out = normalize_unit(volume)
        assert np.array_equal(out.data.reshape(-1), np.array([0.0, 0.5, 1.0], dtype=np.float32))
        assert out.intensity_domain == INTENSITY_UNIT

    def test_hand_computed_thirds(self):
        # (v - 10) / 30 for v in {10, 20, 40}
        volume = Volume(np.array([10.0, 20.0, 40.0], dtype=np.float32).reshape(1, 3, 1))
        out = normalize_unit(volume)
        expected = np.array([0.0, 1.0 / 3.0, 1.0], dtype=np.float32)
        np.testing.assert_allclose(out.data.reshape(-1), expected, rtol=0, atol=1e-7)

    def test_constant_volume_becomes_zeros(self):
        volume = Volume(np.full((3, 3, 3), 42.0, dtype=np.float32))
        out = normalize_unit(volume)
        assert np.all(out.data == 0.0)
        assert out.intensity_domain == INTENSITY_UNIT

    def test_exact_extremes_for_nonconstant_input(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            shape = tuple(rng.integers(1, 7, size=3))
            data = rng.normal(0, 100, size=shape).astype(np.float32)
            if data.min() == data.max():
                continue
            out = normalize_unit(Volume(data))
            assert float(out.data.min()) == 0.0
            assert float(out.data.max()) == 1.0

    def test_positive_affine_invariance(self):
        # offsets stay comparable to the scaled range so float32 quantization
        # of the mapped input cannot exceed the 1e-6 tolerance itself
        rng = np.random.default_rng(4)
        data = rng.uniform(-40, 90, size=(5, 6, 7)).astype(np.float32)
        base = normalize_unit(Volume(data))
        for a, b in ((3.0, 0.0), (0.25, 30.0), (7.5, -300.0)):
            mapped = Volume((data.astype(np.float64) * a + b).astype(np.float32))
            out = normalize_unit(mapped)
            np.testing.assert_allclose(out.data, base.data, rtol=0, atol=1e-6)


class TestResizeNormalizeInterplay:
    def plateau_volume(self, rng):
        # two full guard slices at each extreme so any resampling of the
        # depth axis still attains both vmin and vmax exactly
        data = rng.uniform(10.0, 90.0, size=(10, 6, 6)).astype(np.float32)
        data[:2] = 0.0
        data[-2:] = 100.0
        return Volume(data)

    def test_resize_commutes_with_normalize_on_plateaus(self):
        rng = np.random.default_rng(5)
        target = TargetShape(5, 6, 6)
        for _ in range(10):
            volume = self.plateau_volume(rng)
            a = normalize_unit(resize_trilinear(volume, target))
            b = resize_trilinear(normalize_unit(volume), target)
            np.testing.assert_allclose(a.data, b.data, rtol=0, atol=1e-6)
