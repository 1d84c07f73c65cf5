import numpy as np
import pytest
from hypothesis import given, strategies as st

from ridgeless import (AR1, Custom, DiscreteSpectrum, Equicorrelated, GeometryPair, Isotropic, Latent,
                       Misspecified, Nonlinear, build_geometry, empirical_geometry)
from ridgeless.errors import NoSpectrumModelError, ParameterError, ValidationError
from ridgeless.spectra import trench_eigenvalues

atoms_st = st.lists(st.floats(0.01, 50.0), min_size=1, max_size=8)


class TestDiscreteSpectrum:
    def test_sorted_descending_and_merged(self):
        h = DiscreteSpectrum([1.0, 3.0, 1.0], [0.25, 0.5, 0.25])
        assert list(h.atoms) == [3.0, 1.0]
        assert list(h.weights) == [0.5, 0.5]

    def test_near_duplicates_merge(self):
        h = DiscreteSpectrum([1.0, 1.0 + 1e-14], [0.5, 0.5])
        assert h.atoms.size == 1

    def test_rejects_bad_weights(self):
        with pytest.raises(ValidationError):
            DiscreteSpectrum([1.0, 2.0], [0.5, 0.6])
        with pytest.raises(ValidationError):
            DiscreteSpectrum([-1.0], [1.0])

    def test_immutable(self):
        h = DiscreteSpectrum.point(2.0)
        with pytest.raises(ValueError):
            h.atoms[0] = 5.0

    @given(atoms_st)
    def test_from_eigenvalues_invariants(self, eigs):
        h = DiscreteSpectrum.from_eigenvalues(eigs)
        assert abs(h.weights.sum() - 1.0) < 1e-12
        assert np.all(np.diff(h.atoms) < 0)
        assert np.all(h.atoms >= 0)
        assert h.mean() == pytest.approx(np.mean(eigs), rel=1e-12)


class TestBuildGeometry:
    def test_isotropic(self):
        g = build_geometry(Isotropic(r2=1.0, sigma2=1.0))
        assert list(g.h.atoms) == [1.0] and list(g.g.atoms) == [1.0]
        assert g.beta_norm_sq == 1.0

    def test_equicorrelated(self):
        g = build_geometry(Equicorrelated(rho=0.5, r2=5.0, sigma2=1.0))
        assert list(g.h.atoms) == [0.5] and list(g.g.atoms) == [0.5]
        assert g.beta_norm_sq == 5.0

    def test_equicorrelated_rho0_is_isotropic(self):
        a = build_geometry(Equicorrelated(rho=0.0, r2=1.0, sigma2=1.0))
        b = build_geometry(Isotropic(r2=1.0, sigma2=1.0))
        assert a == b

    def test_latent(self):
        g = build_geometry(Latent(psi=0.5, r_theta2=1.0, sigma_xi2=0.0))
        assert list(g.h.atoms) == [3.0, 1.0]
        assert list(g.h.weights) == [0.5, 0.5]
        assert list(g.g.atoms) == [3.0]
        assert g.beta_norm_sq == pytest.approx(0.5 / 2.25, abs=1e-15)

    @given(st.floats(0.01, 1.0))
    def test_latent_g_on_top_atom(self, psi):
        g = build_geometry(Latent(psi=psi, r_theta2=1.0, sigma_xi2=0.0))
        assert g.g.weights.sum() == pytest.approx(1.0, abs=1e-12)
        assert g.g.atoms[0] == g.h.atoms.max()

    @pytest.mark.parametrize("p", [5, 50, 500])
    def test_ar1_rho0_is_identity(self, p):
        g = build_geometry(AR1(rho=0.0, r2=1.0, sigma2=1.0, p_for_quadrature=p))
        assert list(g.h.atoms) == [1.0]

    def test_trench_matches_toeplitz_spectrum_range(self):
        from scipy.linalg import toeplitz
        rho, p = 0.6, 400
        eig = np.linalg.eigvalsh(toeplitz(rho ** np.arange(p)))
        tr = trench_eigenvalues(rho, p)
        assert tr.min() >= (1 - rho) / (1 + rho) - 1e-12
        assert tr.max() <= (1 + rho) / (1 - rho) + 1e-12
        assert np.mean(tr) == pytest.approx(np.mean(eig), rel=1e-2)

    @pytest.mark.parametrize("spec", [Misspecified(r2=1.0, sigma2=1.0, kappa=0.5), Nonlinear()])
    def test_no_spectrum(self, spec):
        with pytest.raises(NoSpectrumModelError):
            build_geometry(spec)

    def test_custom_passthrough(self):
        geom = GeometryPair.equidistributed(DiscreteSpectrum([1.0, 2.0], [0.5, 0.5]), 2.0)
        assert build_geometry(Custom(geom, 1.0)) is geom

    @pytest.mark.parametrize("make", [lambda: Equicorrelated(rho=1.0), lambda: AR1(rho=-0.1),
                                      lambda: Latent(psi=0.0), lambda: Misspecified(kappa=1.5),
                                      lambda: Misspecified(decay=-1.0), lambda: Isotropic(r2=-1.0)])
    def test_parameter_errors(self, make):
        with pytest.raises(ParameterError):
            make()


class TestEmpiricalGeometry:
    def test_identity(self):
        g = empirical_geometry(np.eye(3), np.array([1.0, 0, 0]))
        assert list(g.h.atoms) == [1.0] and list(g.g.atoms) == [1.0]
        assert g.beta_norm_sq == 1.0

    def test_diag_two(self):
        g = empirical_geometry(np.diag([2.0, 1.0]), np.array([1.0, 1.0]))
        assert list(g.h.atoms) == [2.0, 1.0]
        np.testing.assert_allclose(g.h.weights, [0.5, 0.5], atol=1e-15)
        np.testing.assert_allclose(g.g.weights, [0.5, 0.5], atol=1e-15)
        assert g.beta_norm_sq == 2.0

    def test_aligned(self):
        g = empirical_geometry(np.diag([4.0, 1.0]), np.array([1.0, 0.0]))
        assert list(g.g.atoms) == [4.0] and list(g.g.weights) == [1.0]

    def test_rejections(self):
        with pytest.raises(ValidationError):
            empirical_geometry(np.array([[1.0, 0.5], [0.0, 1.0]]), np.ones(2))
        with pytest.raises(ValidationError):
            empirical_geometry(np.diag([1.0, -1.0]), np.ones(2))
        with pytest.raises(ValidationError):
            empirical_geometry(np.eye(2), np.zeros(2))

    @given(st.integers(0, 2 ** 32 - 1), st.integers(2, 12))
    def test_weights_sum_to_one(self, seed, p):
        r = np.random.default_rng(seed)
        a = r.standard_normal((p, p))
        g = empirical_geometry(a @ a.T, r.standard_normal(p))
        assert abs(g.h.weights.sum() - 1) < 1e-12
        assert abs(g.g.weights.sum() - 1) < 1e-12
