import math
import pickle

import numpy as np
import pytest
from hypothesis import given, strategies as st

from ridgeless import (AR1, Activation, Custom, DiscreteSpectrum, Equicorrelated, GeometryPair, Isotropic, Latent,
                       Misspecified, Nonlinear, cv_asymptotic, gen_dataset, mc_cv_curve, mc_risk_curve)
from ridgeless.errors import DomainError, ParameterError
from ridgeless.estimators import apply_sigma
from ridgeless.simulate import abs_feature_covariance, latent_frame, rep_rng, worker_count

ALL_SPECS = [Isotropic(1, 1), Equicorrelated(0.3, 1, 1), AR1(0.5, 1, 1), Misspecified(2, 1, kappa=0.6),
             Latent(0.25, 1, 0.1), Nonlinear(psi=0.5),
             Custom(GeometryPair.equidistributed(DiscreteSpectrum([1, 4], [0.5, 0.5]), 1.0), 1.0)]


class TestActivation:
    def test_abs_constants(self):
        a = Activation.purely_nonlinear_abs()
        assert a.a == pytest.approx(1.658897, abs=1e-6)
        assert a.b == pytest.approx(0.7978846, abs=1e-7)
        assert a.c1 == 0.0

    def test_custom_standardised(self):
        a = Activation.custom(np.tanh)
        g = np.random.default_rng(0).standard_normal(400_000)
        v = a(g)
        assert abs(v.mean()) < 5 * v.std() / math.sqrt(g.size)
        assert v.var() == pytest.approx(1.0, abs=0.02)
        assert a.c1 > 0.5

    def test_abs_custom_agree(self):
        a = Activation.custom(np.abs)
        assert a.a == pytest.approx(Activation.purely_nonlinear_abs().a, rel=1e-6)
        assert a.c1 == pytest.approx(0.0, abs=1e-12)

    def test_abs_covariance_monte_carlo(self):
        r = np.random.default_rng(1)
        w = r.standard_normal((4, 3)) / math.sqrt(3)
        z = r.standard_normal((400_000, 3))
        f = Activation.purely_nonlinear_abs()(z @ w.T)
        emp = f.T @ f / z.shape[0]
        np.testing.assert_allclose(abs_feature_covariance(w), emp, atol=0.02)


class TestGenDataset:
    @pytest.mark.parametrize("spec", ALL_SPECS, ids=lambda s: type(s).__name__)
    def test_deterministic(self, spec):
        a = gen_dataset(spec, 20, 40, seed=123)
        b = gen_dataset(spec, 20, 40, seed=123)
        assert a.x.tobytes() == b.x.tobytes() and a.y.tobytes() == b.y.tobytes()
        assert a.beta_true.tobytes() == b.beta_true.tobytes()

    @pytest.mark.parametrize("spec", ALL_SPECS, ids=lambda s: type(s).__name__)
    def test_shapes(self, spec):
        d = gen_dataset(spec, 15, 30, seed=1)
        assert d.x.shape == (15, 30) and d.y.shape == (15,) and d.beta_true.shape == (30,)

    def test_nonlinear_standardisation(self):
        d = gen_dataset(Nonlinear(psi=1.0), 500, 500, seed=2)
        x = d.x.ravel()
        se_mean = x.std() / math.sqrt(x.size)
        se_var = math.sqrt(np.var(x ** 2) / x.size)
        assert abs(x.mean()) < 3 * se_mean * math.sqrt(500)  # entries share rows of W
        assert abs(x.var() - 1) < 3 * se_var * math.sqrt(500)

    @given(st.integers(2, 300), st.data())
    def test_latent_frame(self, p, data):
        d = data.draw(st.integers(1, p))
        w = latent_frame(p, d, np.random.default_rng(p * 1000 + d))
        assert np.max(np.abs(np.linalg.norm(w, axis=1) - 1)) < 1e-10
        assert np.max(np.abs(w.T @ w - (p / d) * np.eye(d))) < 1e-10

    def test_latent_zero_dim(self):
        with pytest.raises(ParameterError):
            gen_dataset(Latent(psi=0.001, r_theta2=1, sigma_xi2=0), 10, 100, seed=0)

    def test_latent_linear_reduction(self):
        # the best linear predictor of y given x leaves the stated effective noise
        spec = Latent(psi=0.25, r_theta2=1.0, sigma_xi2=0.1)
        d = gen_dataset(spec, 20_000, 40, seed=4)
        resid = d.y - d.x @ d.beta_true
        assert resid.var() == pytest.approx(d.noise_var, rel=0.05)

    def test_misspecified_noise(self):
        d = gen_dataset(Misspecified(2, 1, kappa=0.6), 50, 40, seed=5)
        assert d.misspec_bias == pytest.approx(0.8, abs=1e-12)
        assert d.noise_var == pytest.approx(1.8, abs=1e-12)
        assert d.beta_true @ d.beta_true == pytest.approx(1.2, abs=1e-12)

    def test_equicorrelated_sigma(self):
        d = gen_dataset(Equicorrelated(0.3, 1, 1), 5, 6, seed=0)
        dense = apply_sigma(d.sigma_pop, np.eye(6))
        np.testing.assert_allclose(dense, 0.7 * np.eye(6) + 0.3, atol=1e-15)

    def test_fixed_beta(self):
        b = np.arange(10.0)
        assert np.array_equal(gen_dataset(Isotropic(1, 1), 5, 10, beta=b).beta_true, b)


class TestHarness:
    def test_seed_streams_distinct(self):
        a = rep_rng(1, 0, 0).standard_normal(4)
        b = rep_rng(1, 0, 1).standard_normal(4)
        c = rep_rng(1, 1, 0).standard_normal(4)
        assert not np.allclose(a, b) and not np.allclose(a, c)

    def test_thread_independence(self):
        spec = Isotropic(1, 1)
        a = mc_risk_curve(spec, 40, [0.5, 2], reps=6, master_seed=9, threads=1)
        b = mc_risk_curve(spec, 40, [0.5, 2], reps=6, master_seed=9, threads=4)
        assert pickle.dumps(a) == pickle.dumps(b)

    def test_single_rep(self):
        a = mc_risk_curve(Isotropic(1, 1), 30, [2], reps=1, master_seed=3, threads=1)
        b = mc_risk_curve(Isotropic(1, 1), 30, [2], reps=1, master_seed=3, threads=3)
        assert a.records[0].mean_total == b.records[0].mean_total
        assert a.records[0].stderr_total == 0.0

    def test_boundary_band(self):
        with pytest.raises(DomainError):
            mc_risk_curve(Isotropic(1, 1), 50, [1.02], reps=2)
        r = mc_risk_curve(Isotropic(1, 1), 50, [1.02], reps=2, force=True)
        assert r.records[0].p == 51

    def test_bad_reps(self):
        with pytest.raises(ParameterError):
            mc_risk_curve(Isotropic(1, 1), 50, [2], reps=0)

    def test_worker_env(self, monkeypatch):
        monkeypatch.setenv("RRL_THREADS", "1")
        assert worker_count() == 1

    @pytest.mark.slow
    @pytest.mark.parametrize("gamma,target", [(2.0, 1.5), (0.5, 1.0)])
    def test_isotropic_mc(self, gamma, target):
        rec = mc_risk_curve(Isotropic(1, 1), 200, [gamma], reps=50).records[0]
        # finite-n mean of the under-parametrized variance is p/(n-p-1)
        exact = (gamma * 200) / (200 - gamma * 200 - 1) if gamma < 1 else target
        assert abs(rec.mean_total - exact) < 3 * rec.stderr_total
        assert rec.valid and rec.failed == 0

    @pytest.mark.slow
    def test_latent_shape(self):
        res = mc_risk_curve(Latent(psi=0.5, r_theta2=1, sigma_xi2=0, d=20), 400, [2, 4, 8], reps=20)
        means = [r.mean_total for r in res.records]
        assert means[0] > means[1] > means[2]

    @pytest.mark.slow
    def test_cv_curve(self):
        lams = np.array([1.0, 2.0, 4.0])
        r = mc_cv_curve(Isotropic(1, 1), 300, 2.0, lams, reps=20)
        th = np.array([cv_asymptotic(2, 1, 1, l) for l in lams])
        assert np.all(np.abs(r.mean_cv - r.noise_var - th) < 3 * r.stderr_cv)
        assert np.all(np.abs(r.mean_cv - r.mean_gcv) < 2 * np.maximum(r.stderr_cv, r.stderr_gcv))
        assert r.failed == 0
