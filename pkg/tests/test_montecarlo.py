import math

import numpy as np
import pytest

from fracexp.expansion import cond_expand_driftless, evaluate_truncation, expand_p0
from fracexp.fbm import covariance
from fracexp.lab.montecarlo import (McEstimate, mc_p0, mc_pt_conditional, nadaraya_watson,
                                    silverman_bandwidth)


class TestMcEstimate:
    def test_from_samples(self):
        x = np.array([1.0, 2.0, 3.0, 4.0])
        est = McEstimate.from_samples(x)
        assert est.value == 2.5 and est.n == 4
        assert est.stderr == pytest.approx(np.std(x, ddof=1) / 2)


class TestMcP0:
    def test_constant_drift_linear_f(self):
        est = mc_p0("x", "0.7", 0.2, 0.7, 0.3, n_paths=2000, n_steps=64, seed=1)
        assert abs(est.value - 0.21) <= 3 * est.stderr + 1e-12

    @pytest.mark.parametrize("H", [0.6, 0.8])
    def test_square_driftless(self, H):
        h = 0.5
        est = mc_p0("x^2", "0", 0.0, H, h, n_paths=50_000, n_steps=64, seed=2)
        assert abs(est.value - h ** (2 * H)) <= 3 * est.stderr

    @pytest.mark.parametrize("vr", ["none", "antithetic", "control"])
    def test_matches_expansion_at_point_one(self, vr):
        f, b, x0, H, h = "sin(x)", "0.5*tanh(x)", 0.3, 0.7, 0.1
        est = mc_p0(f, b, x0, H, h, n_paths=200_000, n_steps=64, seed=3, variance_reduction=vr)
        trunc = evaluate_truncation(expand_p0(f, b, x0, H, 1, 1), h)
        # remainder allowance: size of the next block of terms, (p, q) = (2, 1)
        nxt = evaluate_truncation(expand_p0(f, b, x0, H, 2, 1), h) - trunc
        assert abs(est.value - trunc) <= 3 * est.stderr + 2 * abs(nxt)

    def test_control_variate_reduces_error(self):
        args = ("sin(x)", "0.5*tanh(x)", 0.3, 0.7, 0.05)
        plain = mc_p0(*args, n_paths=20_000, n_steps=64, seed=4)
        ctrl = mc_p0(*args, n_paths=20_000, n_steps=64, seed=4, variance_reduction="control")
        assert ctrl.stderr < plain.stderr / 10
        assert ctrl.n == 10_000

    def test_reproducible(self):
        a = mc_p0("sin(x)", "tanh(x)", 0.0, 0.7, 0.2, 3000, 64, seed=9)
        assert a == mc_p0("sin(x)", "tanh(x)", 0.0, 0.7, 0.2, 3000, 64, seed=9)

    @pytest.mark.parametrize("kw", [{"n_steps": 32}, {"h": 0.0}, {"variance_reduction": "magic"}])
    def test_validation(self, kw):
        args = {"f": "x", "b": "0", "x0": 0.0, "H": 0.7, "h": 0.1, "n_paths": 100, "n_steps": 64}
        with pytest.raises(ValueError):
            mc_p0(**{**args, **kw})


class TestNadarayaWatson:
    def test_recovers_linear_regression(self, rng):
        x = rng.normal(size=50_000)
        y = 0.3 * x + rng.normal(scale=0.1, size=x.size)
        est, n_eff = nadaraya_watson(x, y, 0.5, 0.05)
        assert n_eff > 1000
        assert abs(est.value - 0.15) <= 3 * est.stderr + 2 * 0.05**2

    def test_silverman_scale(self, rng):
        x = rng.normal(size=10_000)
        assert silverman_bandwidth(x) == pytest.approx(0.9 * 10_000 ** (-0.2), rel=0.05)


@pytest.fixture(scope="module")
def linear_run():
    return mc_pt_conditional("x", "0", 0.0, 0.7, 1.0, 0.1, 200_000, 64, bandwidth=0.1,
                             eval_points=[-1.0, 0.0, 1.0, 6.0], seed=3)


class TestConditional:
    def test_gaussian_regression(self, linear_run):
        rho = covariance(1.1, 1.0, 0.7)
        for pt in linear_run.points[:3]:
            assert pt.reliable
            assert abs(pt.estimate.value - (rho - 1) * pt.x) <= 3 * pt.estimate.stderr + 2 * 0.1**2

    def test_unconditional_mean_zero(self, linear_run):
        u = linear_run.unconditional
        assert abs(u.value) <= 3 * u.stderr

    def test_sparse_point_flagged(self, linear_run):
        assert not linear_run.points[3].reliable

    def test_default_bandwidth_is_silverman(self):
        r = mc_pt_conditional("x", "0", 0.0, 0.7, 1.0, 0.1, 4000, 64, eval_points=[0.0], seed=1)
        assert 0 < r.bandwidth < 0.5

    @pytest.mark.slow
    def test_sine_leading_coefficient(self):
        t, H, beta = 1.0, 0.7, 1.0
        hs = np.array([0.02, 0.04, 0.06, 0.08, 0.1])
        ys, ses = [], []
        for i, h in enumerate(hs):
            r = mc_pt_conditional("sin(x)", "0", 0.0, H, t, h, 1_000_000, 64, bandwidth=0.1,
                                  eval_points=[beta], seed=10 + i)
            ys.append(r.points[0].estimate.value)
            ses.append(r.points[0].estimate.stderr)
        ys, ses = np.array(ys), np.array(ses)
        design = np.stack([hs, hs ** (2 * H)], axis=1) / ses[:, None]
        (lead, _), *_ = np.linalg.lstsq(design, ys / ses, rcond=None)
        expected = cond_expand_driftless("sin(x)", t, beta, H, 1, 0).coefficient(0, 1)
        assert lead == pytest.approx(expected, rel=0.10)

    def test_validation(self):
        with pytest.raises(ValueError):
            mc_pt_conditional("x", "0", 0.0, 0.7, 0.0, 0.1, 100, 64)
