"""Spectral laws H (eigenvalues of the covariance) and G (the same law
reweighted by the squared projections of beta), for each covariance model."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Optional, Union

import numpy as np

from .errors import NoSpectrumModelError, ParameterError, ValidationError

MERGE_RTOL = 1e-12
WEIGHT_TOL = 1e-12
G_DROP = 1e-14


def _merge(atoms, weights):
    order = np.argsort(-atoms, kind="stable")
    atoms, weights = atoms[order], weights[order]
    out_a, out_w = [], []
    for a, w in zip(atoms, weights):
        if out_a and abs(out_a[-1] - a) <= MERGE_RTOL * max(abs(out_a[-1]), abs(a)):
            # keep the weighted position so merging is order independent
            tot = out_w[-1] + w
            if tot > 0:
                out_a[-1] = (out_a[-1] * out_w[-1] + a * w) / tot
            out_w[-1] = tot
        else:
            out_a.append(float(a))
            out_w.append(float(w))
    return np.array(out_a), np.array(out_w)


@dataclass(frozen=True)
class DiscreteSpectrum:
    """Finitely supported probability measure on [0, inf).

    Atoms are stored in descending order; atoms closer than ``1e-12``
    relative are merged.  Arrays are read-only.
    """

    atoms: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        a = np.atleast_1d(np.asarray(self.atoms, dtype=float)).ravel()
        w = np.atleast_1d(np.asarray(self.weights, dtype=float)).ravel()
        if a.shape != w.shape or a.size == 0:
            raise ValidationError("atoms and weights must be nonempty and of equal length")
        if not (np.all(np.isfinite(a)) and np.all(np.isfinite(w))):
            raise ValidationError("atoms and weights must be finite")
        if np.any(a < 0):
            raise ValidationError(f"atoms must be nonnegative, got min {a.min()!r}")
        if np.any(w < 0):
            raise ValidationError(f"weights must be nonnegative, got min {w.min()!r}")
        total = w.sum()
        if abs(total - 1.0) > WEIGHT_TOL:
            raise ValidationError(f"weights sum to {total!r}, expected 1 within {WEIGHT_TOL}")
        a, w = _merge(a, w)
        a.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "atoms", a)
        object.__setattr__(self, "weights", w)

    @classmethod
    def point(cls, s: float) -> "DiscreteSpectrum":
        return cls([s], [1.0])

    @classmethod
    def from_eigenvalues(cls, eigs) -> "DiscreteSpectrum":
        """Empirical law with mass 1/p on each eigenvalue."""
        eigs = np.asarray(eigs, dtype=float).ravel()
        return cls(eigs, np.full(eigs.size, 1.0 / eigs.size))

    def integrate(self, fn) -> float:
        """Return the integral of ``fn`` (vectorised over atoms)."""
        return float(np.dot(self.weights, fn(self.atoms)))

    def mean(self) -> float:
        return float(np.dot(self.weights, self.atoms))

    def scaled(self, c: float) -> "DiscreteSpectrum":
        return DiscreteSpectrum(self.atoms * c, self.weights)

    def __len__(self):
        return self.atoms.size

    def __eq__(self, other):
        if not isinstance(other, DiscreteSpectrum):
            return NotImplemented
        return np.array_equal(self.atoms, other.atoms) and np.array_equal(self.weights, other.weights)

    def __hash__(self):
        return hash((self.atoms.tobytes(), self.weights.tobytes()))

    def __repr__(self):
        body = ", ".join(f"{a:.6g}: {w:.6g}" for a, w in zip(self.atoms, self.weights))
        return f"DiscreteSpectrum({{{body}}})"


@dataclass(frozen=True)
class GeometryPair:
    """Joint geometry of (Sigma, beta): laws H, G and r^2 = ||beta||^2."""

    h: DiscreteSpectrum
    g: DiscreteSpectrum
    beta_norm_sq: float

    def __post_init__(self):
        if not (self.beta_norm_sq >= 0 and np.isfinite(self.beta_norm_sq)):
            raise ParameterError(f"beta_norm_sq must be finite and >= 0, got {self.beta_norm_sq!r}")
        # snap G atoms onto the H support
        snapped = []
        for a, w in zip(self.g.atoms, self.g.weights):
            if w <= 0:
                snapped.append(a)
                continue
            k = int(np.argmin(np.abs(self.h.atoms - a)))
            ha = self.h.atoms[k]
            if abs(ha - a) > MERGE_RTOL * max(abs(ha), abs(a), 1e-300):
                raise ValidationError(f"G atom {a!r} is not in the support of H")
            snapped.append(ha)
        if not np.array_equal(np.asarray(snapped), self.g.atoms):
            object.__setattr__(self, "g", DiscreteSpectrum(snapped, self.g.weights))
        object.__setattr__(self, "beta_norm_sq", float(self.beta_norm_sq))

    @classmethod
    def equidistributed(cls, h: DiscreteSpectrum, r2: float) -> "GeometryPair":
        return cls(h, h, r2)


# ---------------------------------------------------------------------------
# model specifications
# ---------------------------------------------------------------------------


def _nonneg(name, value):
    if not (np.isfinite(value) and value >= 0):
        raise ParameterError(f"{name} must be finite and >= 0, got {value!r}")


def _rho(value):
    if not (0.0 <= value < 1.0):
        raise ParameterError(f"rho must lie in [0, 1), got {value!r}")


@dataclass(frozen=True)
class Isotropic:
    r2: float = 1.0
    sigma2: float = 1.0

    def __post_init__(self):
        _nonneg("r2", self.r2)
        _nonneg("sigma2", self.sigma2)


@dataclass(frozen=True)
class Equicorrelated:
    rho: float = 0.5
    r2: float = 1.0
    sigma2: float = 1.0

    def __post_init__(self):
        _rho(self.rho)
        _nonneg("r2", self.r2)
        _nonneg("sigma2", self.sigma2)


@dataclass(frozen=True)
class AR1:
    rho: float = 0.5
    r2: float = 1.0
    sigma2: float = 1.0
    p_for_quadrature: int = 2000

    def __post_init__(self):
        _rho(self.rho)
        _nonneg("r2", self.r2)
        _nonneg("sigma2", self.sigma2)
        if int(self.p_for_quadrature) < 1:
            raise ParameterError("p_for_quadrature must be >= 1")


@dataclass(frozen=True)
class Misspecified:
    """Isotropic model observing a kappa fraction of the signal energy.

    Give exactly one of ``kappa`` (fixed fraction) or ``decay`` (exponent a
    with 1 - kappa(gamma) = (1 + gamma)^-a).
    """

    r2: float = 1.0
    sigma2: float = 1.0
    kappa: Optional[float] = None
    decay: Optional[float] = None

    def __post_init__(self):
        _nonneg("r2", self.r2)
        _nonneg("sigma2", self.sigma2)
        if (self.kappa is None) == (self.decay is None):
            raise ParameterError("give exactly one of kappa or decay")
        if self.kappa is not None and not (0.0 <= self.kappa <= 1.0):
            raise ParameterError(f"kappa must lie in [0, 1], got {self.kappa!r}")
        if self.decay is not None and not (self.decay > 0):
            raise ParameterError(f"decay exponent must be > 0, got {self.decay!r}")

    def kappa_at(self, gamma: float) -> float:
        if self.kappa is not None:
            return float(self.kappa)
        return 1.0 - (1.0 + gamma) ** (-self.decay)


@dataclass(frozen=True)
class Latent:
    """Latent-space model x = W z + u, y = theta' z + xi.

    ``psi`` is the limit of d/p.  ``d`` optionally pins the latent dimension
    for simulation, in which case psi varies with p.
    """

    psi: float = 0.5
    r_theta2: float = 1.0
    sigma_xi2: float = 0.0
    d: Optional[int] = None

    def __post_init__(self):
        if not (self.psi > 0):
            raise ParameterError(f"psi must be > 0, got {self.psi!r}")
        if self.psi > 1:
            raise ParameterError(f"psi must be <= 1 so that H has nonnegative weights, got {self.psi!r}")
        _nonneg("r_theta2", self.r_theta2)
        _nonneg("sigma_xi2", self.sigma_xi2)
        if self.d is not None and int(self.d) < 1:
            raise ParameterError("d must be >= 1")

    def effective_sigma2(self) -> float:
        return self.sigma_xi2 + self.psi * self.r_theta2 / (1.0 + self.psi)

    def beta_norm_sq(self) -> float:
        return self.psi * self.r_theta2 / (1.0 + self.psi) ** 2


@dataclass(frozen=True)
class Nonlinear:
    """Random-features model x = phi(W z) with W ~ N(0, 1/d)."""

    activation: Any = "abs"
    psi: float = 0.5
    r2: float = 1.0
    sigma2: float = 1.0
    d: Optional[int] = None

    def __post_init__(self):
        if not (self.psi > 0):
            raise ParameterError(f"psi must be > 0, got {self.psi!r}")
        _nonneg("r2", self.r2)
        _nonneg("sigma2", self.sigma2)
        if self.d is not None and int(self.d) < 1:
            raise ParameterError("d must be >= 1")


@dataclass(frozen=True)
class Custom:
    geometry: GeometryPair
    sigma2: float = 1.0

    def __post_init__(self):
        _nonneg("sigma2", self.sigma2)

    @property
    def r2(self):
        return self.geometry.beta_norm_sq


ModelSpec = Union[Isotropic, Equicorrelated, AR1, Misspecified, Latent, Nonlinear, Custom]

MODEL_TAGS = {
    Isotropic: "isotropic",
    Equicorrelated: "equicorrelated",
    AR1: "ar1",
    Misspecified: "misspecified",
    Latent: "latent",
    Nonlinear: "nonlinear",
    Custom: "custom",
}


def model_tag(spec) -> str:
    return MODEL_TAGS[type(spec)]


def trench_eigenvalues(rho: float, p: int) -> np.ndarray:
    """Eigenvalues of the p x p AR(1) correlation matrix at midpoint angles."""
    i = np.arange(1, p + 1)
    theta = (p - i + 0.5) * np.pi / (p + 1)
    return (1.0 - rho * rho) / (1.0 - 2.0 * rho * np.cos(theta) + rho * rho)


def build_geometry(spec, gamma: float = 1.0) -> GeometryPair:
    """Limiting (H, G, r^2) for a covariance model.

    ``gamma`` is accepted for interface uniformity; none of the supported
    limits depend on it.
    """
    if not (gamma > 0):
        raise ParameterError(f"gamma must be > 0, got {gamma!r}")
    if isinstance(spec, Isotropic):
        h = DiscreteSpectrum.point(1.0)
        return GeometryPair(h, h, spec.r2)
    if isinstance(spec, Equicorrelated):
        h = DiscreteSpectrum.point(1.0 - spec.rho)
        return GeometryPair(h, h, spec.r2)
    if isinstance(spec, AR1):
        h = DiscreteSpectrum.from_eigenvalues(trench_eigenvalues(spec.rho, int(spec.p_for_quadrature)))
        return GeometryPair(h, h, spec.r2)
    if isinstance(spec, Latent):
        psi = spec.psi
        top = 1.0 + 1.0 / psi
        h = DiscreteSpectrum([1.0, top], [1.0 - psi, psi])
        g = DiscreteSpectrum.point(top)
        return GeometryPair(h, g, spec.beta_norm_sq())
    if isinstance(spec, Custom):
        return spec.geometry
    raise NoSpectrumModelError(f"model {type(spec).__name__} has no covariance spectrum")


def empirical_geometry(sigma, beta, sym_tol: float = 1e-10, psd_tol: float = 1e-10) -> GeometryPair:
    """Empirical (H_n, G_n, ||beta||^2) of an explicit covariance and beta."""
    sigma = np.asarray(sigma, dtype=float)
    beta = np.asarray(beta, dtype=float).ravel()
    if sigma.ndim != 2 or sigma.shape[0] != sigma.shape[1]:
        raise ValidationError(f"sigma must be square, got shape {sigma.shape}")
    p = sigma.shape[0]
    if beta.size != p:
        raise ValidationError(f"beta has length {beta.size}, expected {p}")
    if not (np.all(np.isfinite(sigma)) and np.all(np.isfinite(beta))):
        raise ValidationError("sigma and beta must be finite")
    asym = np.max(np.abs(sigma - sigma.T)) if p else 0.0
    if asym > sym_tol:
        raise ValidationError(f"sigma is not symmetric (max asymmetry {asym:.3g})")
    evals, evecs = np.linalg.eigh(0.5 * (sigma + sigma.T))
    if evals.min() < -psd_tol:
        raise ValidationError(f"sigma is not PSD (min eigenvalue {evals.min():.3g})")
    evals = np.clip(evals, 0.0, None)
    r2 = float(beta @ beta)
    if r2 == 0:
        raise ValidationError("beta = 0 leaves G undefined")
    h = DiscreteSpectrum.from_eigenvalues(evals)
    proj = (evecs.T @ beta) ** 2 / r2
    proj = proj / proj.sum()
    ga, gw = _merge(evals, proj)
    keep = gw > G_DROP
    ga, gw = ga[keep], gw[keep]
    g = DiscreteSpectrum(ga, gw / gw.sum())
    return GeometryPair(h, g, r2)
