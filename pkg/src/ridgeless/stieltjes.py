"""Fixed points of the Silverstein equation on the negative real axis.

Everything here works at z = -lambda (lambda > 0) or in the ridgeless limit
through c0 and the companion value v(0).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import DegenerateSpectrumError, DomainError, NumericalError, ParameterError
from .spectra import DiscreteSpectrum

RESID_TOL = 1e-12


@dataclass(frozen=True)
class StieltjesEval:
    m: float
    m_prime: float
    m1: float
    lam: float
    gamma: float
    companion: float  # x = lambda / (1 - gamma + gamma*lambda*m)


@dataclass(frozen=True)
class CompanionEval:
    v0: float
    v0_prime: float
    gamma: float


def _check_gamma(gamma):
    if not (np.isfinite(gamma) and gamma > 0):
        raise ParameterError(f"gamma must be finite and > 0, got {gamma!r}")


def mp_stieltjes(gamma: float, lam: float) -> tuple[float, float]:
    """Marchenko-Pastur m(-lam) and m'(-lam) in closed form."""
    _check_gamma(gamma)
    if not (lam > 0):
        raise DomainError(f"lambda must be > 0, got {lam!r}")
    b = 1.0 - gamma + lam
    disc = b * b + 4.0 * gamma * lam
    root = math.sqrt(disc)
    # both branches are the same root, arranged to avoid cancellation
    if b > 0:
        m = 2.0 / (root + b)
    else:
        m = (root - b) / (2.0 * gamma * lam)
    m_prime = m * (1.0 + gamma * m) / root
    return m, m_prime


def _positive_spectrum(h: DiscreteSpectrum):
    if not np.any((h.atoms > 0) & (h.weights > 0)):
        raise DegenerateSpectrumError("spectrum has no strictly positive atom")


def solve_c0(h: DiscreteSpectrum, gamma: float) -> float:
    """Nonnegative root of 1 - 1/gamma = int dH / (1 + c gamma s)."""
    _check_gamma(gamma)
    if gamma <= 1:
        raise DomainError(f"c0 is defined only for gamma > 1, got {gamma!r}")
    _positive_spectrum(h)
    c, resid, status = _kernels.c0_bisect(h.atoms, h.weights, gamma)
    if status == 1:
        zero_mass = float(h.weights[h.atoms == 0].sum())
        raise DegenerateSpectrumError(
            f"no c0: mass at zero {zero_mass:.6g} >= 1 - 1/gamma = {1 - 1 / gamma:.6g}")
    if status != 0:
        raise NumericalError("c0 bisection did not reach tolerance", c=c, residual=resid)
    return float(c)


def silverstein_v0(h: DiscreteSpectrum, gamma: float) -> CompanionEval:
    """Companion transform v(0) and v'(0) for gamma > 1."""
    _check_gamma(gamma)
    if gamma <= 1:
        raise DomainError(f"v(0) is finite only for gamma > 1, got {gamma!r}")
    _positive_spectrum(h)
    v0, resid, status = _kernels.v0_bisect(h.atoms, h.weights, gamma)
    if status == 1:
        raise DegenerateSpectrumError("v(0) bracket expansion failed; too much mass at zero")
    if status != 0:
        raise NumericalError("v(0) bisection did not reach tolerance", v0=v0, residual=resid)
    s, w = h.atoms, h.weights
    inv = 1.0 / v0 ** 2 - gamma * float(np.dot(w, s * s / (1.0 + s * v0) ** 2))
    if not (inv > 0):
        raise DegenerateSpectrumError(f"1/v'(0) = {inv!r} is not positive")
    return CompanionEval(float(v0), float(1.0 / inv), float(gamma))


def solve_m_ridge(h: DiscreteSpectrum, gamma: float, lam: float) -> StieltjesEval:
    """m(-lam), m'(-lam) and m_1(-lam) for the law H at aspect ratio gamma."""
    _check_gamma(gamma)
    if not (np.isfinite(lam) and lam > 0):
        raise DomainError(f"lambda must be > 0, got {lam!r}")
    s, w = h.atoms, h.weights
    x, resid, status = _kernels.companion_bisect(s, w, gamma, lam)
    if status != 0 or not np.isfinite(x) or x <= 0:
        raise NumericalError("companion root-finding failed", x=x, residual=resid, gamma=gamma, lam=lam)
    a = lam / x  # = 1 - gamma + gamma*lam*m
    m = (x / lam) * float(np.dot(w, 1.0 / (s + x)))
    dd = s * a + lam
    inv_d2 = 1.0 / (dd * dd)
    denom = 1.0 + gamma * lam * float(np.dot(w, s * inv_d2))
    m_prime = float(np.dot(w, (1.0 + gamma * s * m) * inv_d2)) / denom
    # m1 in companion variables: no O(lam^2) cancellation as lam -> 0
    sx2 = s / ((s + x) * (s + x))
    m1 = float(np.dot(w, s * sx2)) * x / (lam + gamma * x * x * float(np.dot(w, sx2)))
    return StieltjesEval(m=m, m_prime=m_prime, m1=m1, lam=float(lam), gamma=float(gamma), companion=float(x))
