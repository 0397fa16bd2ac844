import io
import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fracexp.errors import DomainError
from fracexp.fbm import (TimeGrid, c_h_const, covariance, increment_cov, kernel_k, read_path_csv,
                         sample_fbm, sample_fbm_array, write_path_csv)
from fracexp.rng import BLOCK_SIZE, standard_normals

hursts = st.floats(min_value=0.51, max_value=0.99)
times = st.floats(min_value=1e-3, max_value=5.0)


def kernel_oracle(t, s, H):
    """K_H(t, s) in closed form through the Gauss hypergeometric function.

    ∫_s^t (u-s)^{a-1} u^a du = (t-s)^a s^a 2F1(-a, a; a+1; -(t-s)/s) / a.
    """
    mpmath.mp.dps = 30
    a = mpmath.mpf(H) - mpmath.mpf(1) / 2
    s, t = mpmath.mpf(s), mpmath.mpf(t)
    c = mpmath.sqrt(H * (2 * H - 1) / mpmath.beta(2 - 2 * H, a))
    val = (t - s) ** a * s**a * mpmath.hyp2f1(-a, a, a + 1, -(t - s) / s) / a
    return float(c * s ** (-a) * val)


class TestCovariance:
    @given(s=times, t=times, H=hursts)
    def test_symmetric(self, s, t, H):
        assert covariance(s, t, H) == covariance(t, s, H)

    @given(t=times, H=hursts)
    def test_diagonal(self, t, H):
        assert covariance(t, t, H) == pytest.approx(t ** (2 * H), rel=1e-12)

    def test_brownian_boundary(self):
        assert covariance(0.3, 0.7, 0.5) == pytest.approx(0.3)

    def test_vectorised(self):
        s = np.array([0.1, 0.5, 1.0])
        np.testing.assert_allclose(covariance(s, 1.0, 0.7), [covariance(x, 1.0, 0.7) for x in s])

    @pytest.mark.parametrize("H", [0.5, 1.0, 0.3, 0.5 + 1e-12])
    def test_guard(self, H):
        if H == 0.5:
            covariance(1, 1, H)
            with pytest.raises(DomainError):
                c_h_const(H)
        else:
            with pytest.raises(DomainError):
                covariance(1, 1, H)


class TestKernel:
    @pytest.mark.parametrize("H", [0.6, 0.75, 0.9])
    def test_constant_against_mpmath(self, H):
        expected = mpmath.sqrt(H * (2 * H - 1) / mpmath.beta(2 - 2 * H, H - 0.5))
        assert c_h_const(H) == pytest.approx(float(expected), rel=1e-13)

    @pytest.mark.parametrize("t,s,H", [(1.0, 0.3, 0.7), (2.0, 1.999, 0.6), (0.5, 1e-4, 0.9),
                                       (1.0, 0.999999, 0.55)])
    def test_against_mpmath(self, t, s, H):
        assert kernel_k(t, s, H) == pytest.approx(kernel_oracle(t, s, H), rel=1e-10)

    def test_zero_beyond_t(self):
        assert kernel_k(1.0, 1.0, 0.7) == 0.0
        assert kernel_k(1.0, 2.0, 0.7) == 0.0

    def test_origin_rejected(self):
        with pytest.raises(DomainError):
            kernel_k(1.0, 0.0, 0.7)

    @pytest.mark.parametrize("H", [0.6, 0.75, 0.9])
    def test_reproduces_covariance(self, H):
        from fracexp.quadrature import adaptive_quad

        pts = np.linspace(0.4, 2.0, 5)
        for s in pts:
            for t in pts:
                lo = min(s, t)
                val = adaptive_quad(lambda u: kernel_k(s, u, H) * kernel_k(t, u, H), 0.0, lo,
                                    rtol=1e-9, atol=1e-12, points=[lo * 0.999])
                assert abs(val - covariance(s, t, H)) <= 1e-6


class TestIncrementCov:
    def test_adjacent_positive(self):
        c = increment_cov([(0, 1), (1, 2)], 0.7)
        assert c[0, 1] > 0
        assert c[0, 1] == pytest.approx(0.5 * (2**1.4 - 2))

    def test_matches_covariance(self):
        c = increment_cov([(0.2, 0.5), (0.3, 1.0)], 0.65)
        R = lambda s, t: covariance(s, t, 0.65)
        assert c[0, 1] == pytest.approx(R(0.5, 1.0) - R(0.5, 0.3) - R(0.2, 1.0) + R(0.2, 0.3))
        assert np.allclose(c, c.T)


class TestGrid:
    def test_rejects_unsorted(self):
        with pytest.raises(ValueError):
            TimeGrid(np.array([0.0, 0.5, 0.4]))

    def test_times_read_only(self):
        g = TimeGrid.uniform(1.0, 4)
        with pytest.raises(ValueError):
            g.times[1] = 3.0


class TestSampler:
    def test_two_point_grid_starts_at_zero(self):
        p = sample_fbm(TimeGrid(np.array([0.0, 1.0])), 0.7, seed=11)[0]
        assert p.values[0] == 0.0

    def test_path_depends_only_on_seed_and_index(self):
        g = TimeGrid.uniform(1.0, 16)
        many = sample_fbm_array(g, 0.7, seed=3, n_paths=BLOCK_SIZE + 5)
        tail = sample_fbm_array(g, 0.7, seed=3, n_paths=3, start=BLOCK_SIZE + 2)
        np.testing.assert_array_equal(many[BLOCK_SIZE + 2:], tail)

    def test_seeds_differ(self):
        g = TimeGrid.uniform(1.0, 8)
        assert not np.allclose(sample_fbm_array(g, 0.7, 1, 4), sample_fbm_array(g, 0.7, 2, 4))

    def test_normals_stream_is_counter_based(self):
        a = standard_normals(5, 0, 3000, 2)
        b = standard_normals(5, 2000, 1000, 2)
        np.testing.assert_array_equal(a[2000:], b)

    @pytest.mark.parametrize("H", [0.6, 0.8])
    def test_variance_and_covariance(self, H):
        g = TimeGrid(np.array([0.0, 0.5, 1.0]))
        B = sample_fbm_array(g, H, seed=7, n_paths=20_000)
        n = B.shape[0]
        var = np.mean(B[:, 2] ** 2)
        assert abs(var - 1.0) <= 3 * math.sqrt(2.0 / n)
        cov = np.mean(B[:, 1] * B[:, 2])
        r = covariance(0.5, 1.0, H)
        se = math.sqrt((0.5 ** (2 * H) + r**2) / n)
        assert abs(cov - r) <= 3 * se


class TestCsv:
    def test_round_trip(self):
        p = sample_fbm(TimeGrid.uniform(2.0, 10), 0.7, seed=1)[0]
        buf = io.StringIO()
        write_path_csv(p, buf)
        t, v = read_path_csv(io.StringIO(buf.getvalue()))
        np.testing.assert_array_equal(t, p.grid.times)
        np.testing.assert_array_equal(v, p.values)
