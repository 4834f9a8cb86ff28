import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from geodp.errors import AlignmentError, DomainError
from geodp.kendall import (
    KendallShapeSpace,
    align,
    as_complex,
    as_real,
    herm,
    make_horizontal,
    shape_distance,
    to_preshape,
)

from conftest import random_preshape

K = KendallShapeSpace(6)
angles = st.floats(0, 2 * math.pi)
seeds = st.integers(0, 2**32 - 1)


def _close_to_shape(rng, x, dist):
    w = make_horizontal(x, rng.standard_normal(x.shape) + 1j * rng.standard_normal(x.shape))
    return K.exp(x, dist * w / np.linalg.norm(w))


class TestPreshape:
    def test_centered_unit_input_unchanged(self, rng):
        x = random_preshape(rng)
        np.testing.assert_allclose(to_preshape(x), x, atol=1e-15)

    def test_translation_and_scale_invariance(self, rng):
        c = rng.standard_normal(7) + 1j * rng.standard_normal(7)
        base = to_preshape(c)
        np.testing.assert_allclose(to_preshape(c + (0.3 - 2j)), base, atol=1e-14)
        np.testing.assert_allclose(to_preshape(4.2 * c), base, atol=1e-14)

    def test_degenerate_rejected(self):
        with pytest.raises(DomainError):
            to_preshape(np.full(5, 1 + 1j))

    def test_real_pairs_accepted(self, rng):
        c = rng.standard_normal((5, 2))
        np.testing.assert_allclose(as_real(as_complex(c)), c)


class TestAlign:
    def test_self_alignment(self, rng):
        x = random_preshape(rng)
        out, angle = align(x, x)
        np.testing.assert_allclose(out, x, atol=1e-15)
        assert angle == pytest.approx(0.0, abs=1e-12)

    @given(alpha=angles, seed=seeds)
    def test_recovers_rotation(self, alpha, seed):
        x = random_preshape(np.random.default_rng(seed))
        out, angle = align(x, np.exp(1j * alpha) * x)
        np.testing.assert_allclose(out, x, atol=1e-12)
        assert abs(herm(x, out) - 1) < 1e-12
        # angle == -alpha mod 2 pi, compared on the circle
        assert abs(np.exp(1j * angle) - np.exp(-1j * alpha)) < 1e-12

    def test_aligned_inner_product_real_nonnegative(self, rng):
        x = np.stack([random_preshape(rng) for _ in range(200)])
        y = np.stack([random_preshape(rng) for _ in range(200)])
        out, _ = align(x, y)
        c = herm(x, out)
        assert np.max(np.abs(c.imag)) < 1e-12
        assert np.all(c.real >= 0)

    def test_orthogonal_shapes_rejected(self):
        x = to_preshape(np.array([1, -1, 0, 0], dtype=complex))
        y = to_preshape(np.array([0, 0, 1, -1], dtype=complex))
        with pytest.raises(AlignmentError):
            align(x, y)


class TestDistance:
    @given(alpha=angles, beta=angles, seed=seeds)
    def test_rotation_invariance(self, alpha, beta, seed):
        rng = np.random.default_rng(seed)
        x, y = random_preshape(rng), random_preshape(rng)
        d = shape_distance(np.exp(1j * alpha) * x, np.exp(1j * beta) * y)
        assert abs(d - shape_distance(x, y)) < 1e-12

    def test_rotated_copy_has_zero_distance(self, rng):
        x = random_preshape(rng)
        assert shape_distance(x, np.exp(0.7j) * x) < 1e-12

    def test_symmetric_and_bounded(self, rng):
        x = np.stack([random_preshape(rng) for _ in range(100)])
        y = np.stack([random_preshape(rng) for _ in range(100)])
        d = shape_distance(x, y)
        np.testing.assert_allclose(d, shape_distance(y, x), atol=1e-14)
        assert np.all((d >= 0) & (d <= math.pi / 2))
        np.testing.assert_allclose(d, np.arccos(np.clip(np.abs(herm(x, y)), 0, 1)), atol=1e-7)

    def test_orthogonal_shapes_at_injectivity_radius(self):
        x = to_preshape(np.array([1, -1, 0, 0], dtype=complex))
        y = to_preshape(np.array([0, 0, 1, -1], dtype=complex))
        assert shape_distance(x, y) == pytest.approx(math.pi / 2)


class TestHorizontal:
    def test_kills_normal_and_vertical(self, rng):
        x = random_preshape(rng)
        assert np.max(np.abs(make_horizontal(x, x))) < 1e-15
        assert np.max(np.abs(make_horizontal(x, 1j * x))) < 1e-15

    def test_constraints_and_idempotence(self, rng):
        x = random_preshape(rng)
        w = rng.standard_normal(6) + 1j * rng.standard_normal(6) + 3.0
        u = make_horizontal(x, w)
        assert abs(u.sum()) < 1e-12
        assert abs(herm(x, u)) < 1e-12
        np.testing.assert_allclose(make_horizontal(x, u), u, atol=1e-15)


class TestExpLog:
    def test_exp_zero(self, rng):
        x = random_preshape(rng)
        np.testing.assert_array_equal(K.exp(x, np.zeros(6, dtype=complex)), x)

    def test_geodesic_stays_on_preshape_sphere(self, rng):
        x = random_preshape(rng)
        w = make_horizontal(x, rng.standard_normal(6) + 1j * rng.standard_normal(6))
        w /= np.linalg.norm(w)
        for t in np.linspace(0, 1.5, 10):
            y = K.exp(x, t * w)
            assert abs(y.mean()) < 1e-12
            assert abs(np.linalg.norm(y) - 1) < 1e-12
            assert abs(shape_distance(x, y) - t) < 1e-9

    def test_log_of_same_shape_is_zero(self, rng):
        x = random_preshape(rng)
        assert np.max(np.abs(K.log(x, x))) < 1e-15
        assert np.max(np.abs(K.log(x, np.exp(2.1j) * x))) < 1e-14

    def test_log_horizontal_with_distance_norm(self, rng):
        for _ in range(100):
            x = random_preshape(rng)
            y = np.exp(1j * rng.uniform(0, 6)) * _close_to_shape(rng, x, rng.uniform(0.01, 1.4))
            v = K.log(x, y)
            assert K.is_tangent(x, v)
            assert abs(K.norm(x, v) - shape_distance(x, y)) < 1e-9
            assert shape_distance(K.exp(x, v), y) < 1e-7

    def test_log_small_distance_series(self, rng):
        x = random_preshape(rng)
        y = _close_to_shape(rng, x, 1e-8)
        assert K.norm(x, K.log(x, y)) == pytest.approx(1e-8, rel=1e-6)

    def test_log_at_injectivity_radius_rejected(self):
        x = to_preshape(np.array([1, -1, 0, 0], dtype=complex))
        y = to_preshape(np.array([0, 0, 1, -1], dtype=complex))
        with pytest.raises(DomainError, match="distance"):
            KendallShapeSpace(4).log(x, y)

    def test_too_few_landmarks(self):
        with pytest.raises(DomainError):
            KendallShapeSpace(2)
