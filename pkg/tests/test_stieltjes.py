import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from ridgeless import DiscreteSpectrum, mp_stieltjes, silverstein_v0, solve_c0, solve_m_ridge
from ridgeless.errors import DomainError

delta1 = DiscreteSpectrum.point(1.0)

spectra_st = st.lists(st.tuples(st.floats(0.05, 20.0), st.floats(0.05, 1.0)), min_size=1, max_size=6).map(
    lambda pairs: DiscreteSpectrum([a for a, _ in pairs],
                                   np.array([w for _, w in pairs]) / sum(w for _, w in pairs)))


class TestMP:
    def test_values(self):
        assert mp_stieltjes(2, 1)[0] == pytest.approx(math.sqrt(8) / 4, abs=1e-12)
        assert mp_stieltjes(2, 2)[0] == pytest.approx((-1 + math.sqrt(17)) / 8, abs=1e-12)

    def test_small_lambda_under(self):
        assert mp_stieltjes(0.5, 1e-8)[0] == pytest.approx(2.0, abs=1e-6)

    def test_derivative_fd(self):
        h = 1e-6
        for g, lam in [(0.5, 0.3), (2, 0.4), (5, 3.0)]:
            fd = (mp_stieltjes(g, lam - h)[0] - mp_stieltjes(g, lam + h)[0]) / (2 * h)
            assert mp_stieltjes(g, lam)[1] == pytest.approx(fd, rel=1e-6)

    def test_domain(self):
        with pytest.raises(DomainError):
            mp_stieltjes(2, 0.0)


class TestC0:
    def test_values(self):
        assert solve_c0(delta1, 2) == pytest.approx(0.5, abs=1e-12)
        assert solve_c0(DiscreteSpectrum([1, 3], [0.5, 0.5]), 2) == pytest.approx(1 / (2 * math.sqrt(3)), abs=1e-12)
        assert solve_c0(DiscreteSpectrum.point(0.5), 2) == pytest.approx(1.0, abs=1e-12)

    def test_domain(self):
        with pytest.raises(DomainError):
            solve_c0(delta1, 1.0)
        with pytest.raises(ValueError):
            solve_c0(DiscreteSpectrum.point(0.0), 2.0)

    @given(spectra_st, st.floats(1.05, 20.0))
    def test_c0_gamma_equals_v0(self, h, gamma):
        c0 = solve_c0(h, gamma)
        assert c0 * gamma == pytest.approx(silverstein_v0(h, gamma).v0, rel=1e-10)
        resid = 1 - 1 / gamma - h.integrate(lambda s: 1 / (1 + c0 * gamma * s))
        assert abs(resid) < 1e-12


class TestV0:
    @pytest.mark.parametrize("h,g,v0,vp", [(delta1, 2, 1, 2), (DiscreteSpectrum.point(0.5), 2, 2, 8),
                                           (delta1, 5, 0.25, 5 / 64)])
    def test_values(self, h, g, v0, vp):
        e = silverstein_v0(h, g)
        assert e.v0 == pytest.approx(v0, abs=1e-12)
        assert e.v0_prime == pytest.approx(vp, abs=1e-10)

    @given(spectra_st, st.floats(1.05, 20.0), st.floats(0.1, 10.0))
    def test_scaling(self, h, gamma, c):
        v = silverstein_v0(h, gamma).v0
        assert silverstein_v0(h.scaled(c), gamma).v0 == pytest.approx(v / c, rel=1e-10)


class TestRidgeM:
    def test_matches_mp(self):
        e = solve_m_ridge(delta1, 2, 2)
        assert e.m == pytest.approx(0.3903882032022076, abs=1e-10)

    def test_grid_matches_mp(self):
        for g in np.linspace(0.2, 5, 10):
            for lam in np.geomspace(0.01, 10, 10):
                m, mp = mp_stieltjes(g, lam)
                e = solve_m_ridge(delta1, g, lam)
                assert e.m == pytest.approx(m, abs=1e-10)
                assert e.m_prime == pytest.approx(mp, rel=1e-8)

    def test_m_prime_fd(self):
        h = 1e-5
        fd = (mp_stieltjes(2, 0.4 - h)[0] - mp_stieltjes(2, 0.4 + h)[0]) / (2 * h)
        assert solve_m_ridge(delta1, 2, 0.4).m_prime == pytest.approx(fd, abs=1e-6)

    def test_m1_small_lambda(self):
        assert solve_m_ridge(delta1, 2, 1e-8).m1 == pytest.approx(0.5, abs=1e-4)

    @given(spectra_st, st.floats(0.1, 10.0))
    def test_monotone(self, h, gamma):
        lams = np.geomspace(1e-3, 100, 25)
        evals = [solve_m_ridge(h, gamma, l) for l in lams]
        ms = np.array([e.m for e in evals])
        assert np.all(np.diff(ms) < 0)
        assert all(e.m > 0 and e.m_prime > 0 for e in evals)

    def test_domain(self):
        with pytest.raises(DomainError):
            solve_m_ridge(delta1, 2, 0.0)
