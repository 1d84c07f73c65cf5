"""Asymptotic bias, variance and risk of min-norm and ridge least squares."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import DomainError, InterpolationBoundaryError, ParameterError
from .spectra import DiscreteSpectrum, GeometryPair, Latent, Misspecified, build_geometry
from .stieltjes import mp_stieltjes, solve_c0, solve_m_ridge

BOUNDARY_BAND = 1e-9


@dataclass(frozen=True)
class RiskDecomposition:
    bias: float
    variance: float
    misspec_bias: float
    total: float
    gamma: float
    lam: float = 0.0

    @classmethod
    def build(cls, bias, variance, gamma, lam=0.0, misspec_bias=0.0):
        bias, variance, misspec_bias = float(bias), float(variance), float(misspec_bias)
        # roundoff can push an exact zero a few ulps negative
        bias = 0.0 if -1e-15 < bias < 0 else bias
        return cls(bias, variance, misspec_bias, bias + variance + misspec_bias, float(gamma), float(lam))

    def as_dict(self):
        return {
            "gamma": self.gamma,
            "lambda": self.lam,
            "bias": self.bias,
            "variance": self.variance,
            "misspec_bias": self.misspec_bias,
            "total": self.total,
        }


def _check(gamma, sigma2=0.0):
    if not (np.isfinite(gamma) and gamma > 0):
        raise ParameterError(f"gamma must be finite and > 0, got {gamma!r}")
    if not (np.isfinite(sigma2) and sigma2 >= 0):
        raise ParameterError(f"sigma2 must be finite and >= 0, got {sigma2!r}")
    if abs(gamma - 1.0) < BOUNDARY_BAND:
        raise InterpolationBoundaryError(f"gamma = {gamma!r} is on the interpolation boundary")


def minnorm_risk(geom: GeometryPair, gamma: float, sigma2: float) -> RiskDecomposition:
    """Limiting bias/variance of the min-norm interpolator."""
    _check(gamma, sigma2)
    if gamma < 1:
        return RiskDecomposition.build(0.0, sigma2 * gamma / (1.0 - gamma), gamma)
    c0 = solve_c0(geom.h, gamma)
    s, w = geom.h.atoms, geom.h.weights
    den = (1.0 + c0 * gamma * s) ** 2
    e1 = float(np.dot(w, s * s / den))
    e2 = float(np.dot(w, s / den))
    sg, wg = geom.g.atoms, geom.g.weights
    bias_int = float(np.dot(wg, sg / (1.0 + c0 * gamma * sg) ** 2))
    ratio = gamma * c0 * e1 / e2
    bias = geom.beta_norm_sq * (1.0 + ratio) * bias_int
    variance = sigma2 * ratio
    return RiskDecomposition.build(bias, variance, gamma)


def isotropic_closed_forms(gamma: float, r2: float, sigma2: float) -> tuple[RiskDecomposition, Optional[float]]:
    """Closed-form isotropic min-norm risk and the location of the gamma > 1
    local minimum (``None`` when SNR <= 1)."""
    _check(gamma, sigma2)
    if gamma < 1:
        decomp = RiskDecomposition.build(0.0, sigma2 * gamma / (1.0 - gamma), gamma)
    else:
        decomp = RiskDecomposition.build(r2 * (1.0 - 1.0 / gamma), sigma2 / (gamma - 1.0), gamma)
    local_min = None
    if sigma2 > 0 and r2 / sigma2 > 1:
        root = math.sqrt(r2 / sigma2)
        local_min = root / (root - 1.0)
    return decomp, local_min


def misspecified_risk(gamma: float, r2: float, sigma2: float, kappa_mode) -> RiskDecomposition:
    """Isotropic risk when only a kappa fraction of r^2 is observed.

    ``kappa_mode`` is a :class:`Misspecified` spec or a float kappa.  The
    unobserved signal appears twice: as irreducible ``misspec_bias`` and as
    extra noise, folded into ``variance``.
    """
    if isinstance(kappa_mode, Misspecified):
        kappa = kappa_mode.kappa_at(gamma)
    else:
        kappa = float(kappa_mode)
        if not (0.0 <= kappa <= 1.0):
            raise ParameterError(f"kappa must lie in [0, 1], got {kappa!r}")
    _check(gamma, sigma2)
    miss = r2 * (1.0 - kappa)
    base, _ = isotropic_closed_forms(gamma, r2 * kappa, sigma2 + miss)
    return RiskDecomposition.build(base.bias, base.variance, gamma, misspec_bias=miss)


def latent_c0(psi: float, gamma: float) -> float:
    """Nonnegative root of the latent-model quadratic for c0."""
    if not (0 < psi <= 1):
        raise ParameterError(f"psi must lie in (0, 1], got {psi!r}")
    if gamma <= 1:
        raise DomainError(f"latent c0 needs gamma > 1, got {gamma!r}")
    a_ = gamma
    b_ = (1.0 + 1.0 / psi) * gamma
    ell = 1.0 - 1.0 / gamma
    qa = ell * a_ * b_
    qb = ell * (a_ + b_) - (1.0 - psi) * b_ - psi * a_
    qc = -1.0 / gamma
    disc = qb * qb - 4.0 * qa * qc
    # qa > 0 and qc < 0 so exactly one root is positive
    sq = math.sqrt(disc)
    if qb >= 0:
        return (2.0 * qc) / (-qb - sq)
    return (-qb + sq) / (2.0 * qa)


def latent_minnorm_risk(psi: float, gamma: float, r_theta2: float, sigma_xi2: float) -> RiskDecomposition:
    """Min-norm risk for the latent-space model with two-atom H."""
    if not (gamma > 1):
        raise DomainError(f"latent formula needs gamma > 1, got {gamma!r}")
    spec = Latent(psi=psi, r_theta2=r_theta2, sigma_xi2=sigma_xi2)
    _check(gamma, spec.effective_sigma2())
    c0 = latent_c0(psi, gamma)
    top = 1.0 + 1.0 / psi
    t1 = (1.0 + c0 * gamma) ** 2
    t2 = (1.0 + c0 * gamma * top) ** 2
    e1 = (1.0 - psi) / t1 + psi * top ** 2 / t2
    e2 = (1.0 - psi) / t1 + (1.0 + psi) / t2
    ratio = gamma * c0 * e1 / e2
    bias = (1.0 + ratio) * r_theta2 / ((1.0 + psi) * t2)
    variance = spec.effective_sigma2() * ratio
    return RiskDecomposition.build(bias, variance, gamma)


def ridge_risk(geom: GeometryPair, gamma: float, sigma2: float, lam: float) -> RiskDecomposition:
    """Limiting ridge bias/variance at penalty lam > 0."""
    if not (np.isfinite(gamma) and gamma > 0):
        raise ParameterError(f"gamma must be finite and > 0, got {gamma!r}")
    if not (sigma2 >= 0):
        raise ParameterError(f"sigma2 must be >= 0, got {sigma2!r}")
    ev = solve_m_ridge(geom.h, gamma, lam)
    # with x the companion root, lam + a s = lam (s + x) / x and
    # 1 - gamma + gamma lam^2 m' = lam^2 x' / x^2, which avoids cancellation
    x = ev.companion
    sg, wg = geom.g.atoms, geom.g.weights
    bias = geom.beta_norm_sq * (1.0 + gamma * ev.m1) * x * x * float(np.dot(wg, sg / (sg + x) ** 2))
    s, w = geom.h.atoms, geom.h.weights
    q = float(np.dot(w, (s / (s + x)) ** 2))
    variance = sigma2 * gamma * q / (1.0 - gamma * q)
    return RiskDecomposition.build(bias, variance, gamma, lam=lam)


def isotropic_ridge_risk(gamma: float, r2: float, sigma2: float, lam: float) -> float:
    """Isotropic ridge risk r^2 lam^2 m' + sigma^2 gamma (m - lam m')."""
    m, mp = mp_stieltjes(gamma, lam)
    return r2 * lam ** 2 * mp + sigma2 * gamma * (m - lam * mp)


def cv_asymptotic(gamma: float, r2: float, sigma2: float, lam: float) -> float:
    """Limit of CV_n(lam) - sigma^2 under the isotropic prior."""
    if not (sigma2 > 0):
        raise ParameterError(f"sigma2 must be > 0, got {sigma2!r}")
    if not (r2 >= 0):
        raise ParameterError(f"r2 must be >= 0, got {r2!r}")
    alpha = r2 / (sigma2 * gamma)
    m, mp = mp_stieltjes(gamma, lam)
    return sigma2 * gamma * (m - lam * (1.0 - alpha * lam) * mp)


def norm_limit(geom: GeometryPair, gamma: float, sigma2: float) -> float:
    """Limiting squared l2 norm of the min-norm estimator."""
    _check(gamma, sigma2)
    r2 = geom.beta_norm_sq
    if gamma < 1:
        s, w = geom.h.atoms, geom.h.weights
        if np.any((s == 0) & (w > 0)):
            raise DomainError("norm diverges: H has an atom at zero and gamma < 1")
        return r2 + sigma2 * gamma / (1.0 - gamma) * float(np.dot(w, 1.0 / s))
    c0 = solve_c0(geom.h, gamma)
    sg, wg = geom.g.atoms, geom.g.weights
    k = c0 * gamma * sg
    return r2 * float(np.dot(wg, k / (1.0 + k))) + c0 * gamma * sigma2


def equicorrelated_risk(gamma: float, r2: float, sigma2: float, rho: float) -> RiskDecomposition:
    """Closed form for the rho-equicorrelated design, gamma > 1."""
    if not (0.0 <= rho < 1.0):
        raise ParameterError(f"rho must lie in [0, 1), got {rho!r}")
    _check(gamma, sigma2)
    if gamma < 1:
        raise DomainError(f"closed form holds for gamma > 1, got {gamma!r}")
    return RiskDecomposition.build(r2 * (1.0 - rho) * (1.0 - 1.0 / gamma), sigma2 / (gamma - 1.0), gamma)


def theory_curve(spec, gamma: float, lam: float = 0.0) -> RiskDecomposition:
    """Dispatch to the right formula for a model spec at one (gamma, lam)."""
    if isinstance(spec, Misspecified):
        if lam > 0:
            kappa = spec.kappa_at(gamma)
            miss = spec.r2 * (1.0 - kappa)
            geom = GeometryPair.equidistributed(DiscreteSpectrum.point(1.0), spec.r2 * kappa)
            base = ridge_risk(geom, gamma, spec.sigma2 + miss, lam)
            return RiskDecomposition.build(base.bias, base.variance, gamma, lam=lam, misspec_bias=miss)
        return misspecified_risk(gamma, spec.r2, spec.sigma2, spec)
    if isinstance(spec, Latent):
        geom = build_geometry(spec, gamma)
        sigma2 = spec.effective_sigma2()
    else:
        geom = build_geometry(spec, gamma)
        sigma2 = spec.sigma2
    if lam > 0:
        return ridge_risk(geom, gamma, sigma2, lam)
    return minnorm_risk(geom, gamma, sigma2)
