"""Resolvent equations of the nonlinear random-features model, its limiting
Stieltjes transform, and the ridgeless variance read off the Laurent
expansion of the resolvent derivative at xi = 0."""
from __future__ import annotations

import cmath
import math
import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np
from numpy.polynomial import polynomial as P

from . import _kernels
from .errors import AccuracyWarning, DomainError, InSpectrumError, NumericalError, ParameterError

ETA0 = 10.0
RATIO = 0.8
RESID_TOL = 1e-10
IMAG_TOL = 1e-7


@dataclass(frozen=True)
class ResolventPair:
    m1: complex
    m2: complex
    xi: complex
    s: float
    t: float
    gamma: float
    psi: float
    c1: float
    residual: float

    @property
    def m(self) -> complex:
        """gamma * m1 + m2."""
        return self.gamma * self.m1 + self.m2


@dataclass(frozen=True)
class LaurentCoefficients:
    d_minus1: float
    d0: float
    variance: float
    gamma: float
    psi: float
    c1: float
    sigma2: float
    error_estimate: float
    eps_nodes: tuple


def _path(xi: complex, eta0: float):
    """Imaginary parts from eta0 down to Im(xi)."""
    eta = max(eta0, xi.imag)
    out = [eta]
    while eta > xi.imag:
        nxt = eta * RATIO
        if nxt <= xi.imag or (xi.imag == 0 and nxt < 1e-9):
            nxt = xi.imag
        out.append(nxt)
        eta = nxt
    return out


def _simple_roots(xi, s, gamma):
    a = -xi - s
    qa, qb, qc = xi, 1.0 - gamma - xi * a, -a
    d = cmath.sqrt(qb * qb - 4.0 * qa * qc)
    # cancellation-free pair
    q = -0.5 * (qb + d) if (qb.conjugate() * d).real >= 0 else -0.5 * (qb - d)
    r1 = q / qa
    r2 = qc / q if q != 0 else -qb / qa - r1
    return r1, r2, (qa, qb, qc)


def resolvent_simple(xi, s: float, gamma: float, eta0: float = ETA0) -> ResolventPair:
    """Closed-form solution of m2 = 1/(-xi - gamma m1), m1 = 1/(-xi - s - m2).

    The Stieltjes branch is tracked by continuity from Im(xi) = eta0, where
    it is the root closest to -1/xi.
    """
    xi = complex(xi)
    if xi == 0:
        raise DomainError("xi must be nonzero")
    if not (gamma >= 0):
        raise ParameterError(f"gamma must be >= 0, got {gamma!r}")
    if xi.imag < 0:
        raise DomainError("xi must lie in the closed upper half plane")
    m2 = None
    for eta in _path(xi, eta0):
        z = complex(xi.real, eta)
        r1, r2, _ = _simple_roots(z, s, gamma)
        ref = -1.0 / z if m2 is None else m2
        m2 = r1 if abs(r1 - ref) <= abs(r2 - ref) else r2
    _, _, (qa, qb, qc) = _simple_roots(xi, s, gamma)
    for _ in range(2):
        der = 2.0 * qa * m2 + qb
        if der == 0:
            break
        m2 = m2 - (qa * m2 * m2 + qb * m2 + qc) / der
    m1 = 1.0 / (-xi - s - m2)
    if xi.imag == 0 and (abs(m1.imag) + abs(m2.imag)) > IMAG_TOL:
        raise InSpectrumError(f"xi = {xi.real} lies inside the spectrum", xi=xi)
    r = abs(m2 - 1.0 / (-xi - gamma * m1)) + abs(m1 - 1.0 / (-xi - s - m2))
    return ResolventPair(m1, m2, xi, float(s), 0.0, float(gamma), float("nan"), 0.0, float(r))


def general_residual(m1, m2, xi, s, t, gamma, psi, c1) -> float:
    f1, f2 = _kernels._resolvent_map(complex(m1), complex(m2), complex(xi), float(s), float(t), float(gamma),
                                     float(psi), float(c1))
    return abs(f1 - m1) + abs(f2 - m2)


def _solve_general(xi, s, t, gamma, psi, c1, eta0=ETA0, init=None):
    m1, m2, r, status, last = _kernels.resolvent_path(xi, s, t, gamma, psi, c1, eta0=eta0, ratio=RATIO,
                                                      damping=0.5, tol=RESID_TOL, init=init)
    if status != 0:
        raise NumericalError(f"resolvent continuation failed at xi = {xi}", last_good_eta=last, residual=r)
    return complex(m1), complex(m2), float(r)


def resolvent_general(xi, s: float, t: float, gamma: float, psi: float, c1: float,
                      eta0: float = ETA0) -> ResolventPair:
    """Solve the coupled fourth-degree resolvent system by damped fixed point
    with Newton polishing, continued from Im(xi) = eta0."""
    xi = complex(xi)
    if not (s >= t >= 0):
        raise ParameterError(f"need s >= t >= 0, got s={s!r}, t={t!r}")
    if not (0 <= c1 < 1):
        raise ParameterError(f"c1 must lie in [0, 1), got {c1!r}")
    if not (psi > 0):
        raise ParameterError(f"psi must be > 0, got {psi!r}")
    if not (gamma >= 0):
        raise ParameterError(f"gamma must be >= 0, got {gamma!r}")
    if xi.imag < 0 or xi == 0:
        raise DomainError("xi must be nonzero and in the closed upper half plane")
    m1, m2, r = _solve_general(xi, s, t, gamma, psi, c1, eta0)
    if xi.imag == 0 and abs(m1.imag) + abs(m2.imag) > IMAG_TOL:
        raise InSpectrumError(f"xi = {xi.real} lies inside the spectrum", xi=xi)
    return ResolventPair(m1, m2, xi, float(s), float(t), float(gamma), float(psi), float(c1), r)


def _stieltjes_poly(xi, gamma, psi, c1):
    # P(s) = m1bar*m2bar = (gamma-1) s + gamma xi s^2
    pp = np.array([0.0, gamma - 1.0, gamma * xi], dtype=complex)
    lhs = np.array([-1.0, -xi], dtype=complex)
    first = P.polysub(lhs, pp)
    second = P.polysub(c1 * pp, np.array([psi], dtype=complex))
    poly = P.polyadd(P.polymul(first, second), c1 * c1 * P.polymul(pp, pp))
    return poly


def _poly_roots(coef):
    coef = np.trim_zeros(np.asarray(coef, dtype=complex), "b")
    return np.roots(coef[::-1])


def stieltjes_nonlinear(xi, gamma: float, psi: float, c1: float, eta0: float = ETA0) -> complex:
    """Limiting Stieltjes transform of X'X/n for X = phi(Z W') at xi."""
    xi = complex(xi)
    if xi == 0 or xi.imag < 0:
        raise DomainError("xi must be nonzero and in the closed upper half plane")
    if not (psi > 0):
        raise ParameterError(f"psi must be > 0, got {psi!r}")
    if not (0 <= c1 < 1):
        raise ParameterError(f"c1 must lie in [0, 1), got {c1!r}")
    s = None
    for eta in _path(xi, eta0):
        z = complex(xi.real, eta)
        roots = _poly_roots(_stieltjes_poly(z, gamma, psi, c1))
        ref = -1.0 / z if s is None else s
        s = roots[np.argmin(np.abs(roots - ref))]
    coef = _stieltjes_poly(xi, gamma, psi, c1)
    dcoef = P.polyder(coef)
    for _ in range(3):
        der = P.polyval(s, dcoef)
        if der == 0:
            break
        s = s - P.polyval(s, coef) / der
    s = complex(s)
    if xi.imag == 0 and abs(s.imag) > IMAG_TOL:
        raise InSpectrumError(f"xi = {xi.real} lies inside the spectrum", xi=xi)
    return s


# ---------------------------------------------------------------------------
# Laurent extraction
# ---------------------------------------------------------------------------


def _base_at(eps, gamma, psi, c1):
    """Continuation solution at xi = -eps, x = 0; None when in spectrum."""
    try:
        m1, m2, _ = _solve_general(complex(-eps, 0.0), 0.0, 0.0, gamma, psi, c1)
    except NumericalError:
        return None
    if abs(m1.imag) + abs(m2.imag) > IMAG_TOL:
        return None
    return m1, m2


def spectral_gap_edge(gamma, psi, c1, start=0.005, grow=1.2, stop=4.0, iters=40):
    """Smallest eps > 0 such that xi = -eps enters the spectrum (inf if none
    below ``stop``)."""
    if _base_at(start, gamma, psi, c1) is None:
        raise NumericalError("no spectral gap around xi = 0 at this resolution", gamma=gamma, start=start)
    lo, hi = start, None
    eps = start
    while eps < stop:
        eps *= grow
        if _base_at(eps, gamma, psi, c1) is None:
            hi = eps
            break
        lo = eps
    if hi is None:
        return math.inf
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if _base_at(mid, gamma, psi, c1) is None:
            hi = mid
        else:
            lo = mid
    return lo


def resolvent_derivative(eps, gamma, psi, c1, h=None):
    """d/dx [gamma m1 + m2] at (s, t) = (x, c1 x), x = 0, xi = -eps.

    Centered differences at steps h and h/2 combined by Richardson.
    """
    base = _base_at(eps, gamma, psi, c1)
    if base is None:
        raise InSpectrumError(f"xi = {-eps} lies inside the spectrum", xi=-eps)
    if h is None:
        h = min(1e-5, 1e-2 * eps * eps)

    def m_at(x):
        m1, m2, _ = _solve_general(complex(-eps, 0.0), x, c1 * x, gamma, psi, c1, init=base)
        return (gamma * m1 + m2).real

    d1 = (m_at(h) - m_at(-h)) / (2.0 * h)
    d2 = (m_at(h / 2) - m_at(-h / 2)) / h
    return (4.0 * d2 - d1) / 3.0


def laurent_variance(gamma: float, psi: float, c1: float, sigma2: float = 1.0,
                     eps_max: Optional[float] = None, n_nodes: int = 4) -> LaurentCoefficients:
    """Fit q(-eps) eps^2 = D_{-1} + D_0 eps^2 + O(eps^4) and return sigma^2 D_0,
    the ridgeless variance of the random-features model."""
    if not (gamma > 0) or abs(gamma - 1.0) < 1e-9:
        raise DomainError(f"gamma must be positive and != 1, got {gamma!r}")
    if not (psi > 0):
        raise ParameterError(f"psi must be > 0, got {psi!r}")
    if not (0 <= c1 < 1):
        raise ParameterError(f"c1 must lie in [0, 1), got {c1!r}")
    if not (sigma2 >= 0):
        raise ParameterError(f"sigma2 must be >= 0, got {sigma2!r}")
    if n_nodes < 4:
        raise ParameterError("need at least 4 nodes")
    if eps_max is None:
        edge = spectral_gap_edge(gamma, psi, c1)
        eps_max = min(0.32, 0.25 * edge)
    # one extra node, used only for the error estimate
    eps_all = eps_max * 2.0 ** (-np.arange(n_nodes + 1) / 2.0)
    q_all = np.array([resolvent_derivative(e, gamma, psi, c1) for e in eps_all])
    u_all = eps_all * eps_all
    deg = n_nodes - 1
    coef = np.polyfit(u_all[:n_nodes], (q_all * u_all)[:n_nodes], deg)[::-1]
    d_m1, d0 = float(coef[0]), float(coef[1])
    shifted = np.polyfit(u_all[1:], (q_all * u_all)[1:], deg)[::-1]
    err = abs(float(shifted[1]) - d0)
    eps = eps_all[:n_nodes]
    if err > 1e-3 * abs(d0):
        warnings.warn(f"Laurent fit error estimate {err:.3g} exceeds 1e-3 |D0| = {1e-3 * abs(d0):.3g}",
                      AccuracyWarning, stacklevel=2)
    return LaurentCoefficients(d_m1, d0, sigma2 * d0, float(gamma), float(psi), float(c1), float(sigma2), err,
                               tuple(float(e) for e in eps))
