"""Finite-sample ridge / min-norm least squares, exact conditional risk given
X, and leave-one-out / generalized cross-validation."""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Any, Optional, Sequence

import numpy as np
import scipy.linalg

from .errors import CVUndefinedError, DomainError, ParameterError, RankAmbiguityWarning, ValidationError
from .risk_theory import RiskDecomposition

PINV_RTOL = 1e-12


class LowRankPlusIdentity:
    """Covariance operator ``scale * I + W W^T`` without forming it."""

    def __init__(self, w, scale: float = 1.0):
        w = np.asarray(w, dtype=float)
        self.w = w[:, None] if w.ndim == 1 else w
        self.scale = float(scale)

    @property
    def shape(self):
        p = self.w.shape[0]
        return (p, p)

    def apply(self, m):
        return self.scale * m + self.w @ (self.w.T @ m)

    def to_dense(self):
        return self.scale * np.eye(self.w.shape[0]) + self.w @ self.w.T


def apply_sigma(sigma_pop, m):
    """Return Sigma @ m for any supported covariance handle (None = identity,
    1-D = diagonal, 2-D = dense, or an object with ``apply``)."""
    if sigma_pop is None:
        return m
    if hasattr(sigma_pop, "apply"):
        return sigma_pop.apply(m)
    s = np.asarray(sigma_pop)
    if s.ndim == 1:
        return s[:, None] * m if m.ndim == 2 else s * m
    return s @ m


def _sigma_dim(sigma_pop):
    if sigma_pop is None:
        return None
    if hasattr(sigma_pop, "shape"):
        return sigma_pop.shape[0]
    return np.asarray(sigma_pop).shape[0]


@dataclass
class Dataset:
    x: np.ndarray
    y: np.ndarray
    beta_true: Optional[np.ndarray] = None
    sigma_pop: Any = None
    noise_var: float = 0.0
    seed: Optional[int] = None
    model: Any = None
    misspec_bias: float = 0.0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float)
        self.y = np.asarray(self.y, dtype=float).ravel()
        if self.x.ndim != 2:
            raise ValidationError(f"x must be 2-D, got shape {self.x.shape}")
        n, p = self.x.shape
        if self.y.size != n:
            raise ValidationError(f"y has length {self.y.size}, expected {n}")
        if self.beta_true is not None:
            self.beta_true = np.asarray(self.beta_true, dtype=float).ravel()
            if self.beta_true.size != p:
                raise ValidationError(f"beta_true has length {self.beta_true.size}, expected {p}")
        dim = _sigma_dim(self.sigma_pop)
        if dim is not None and dim != p:
            raise ValidationError(f"sigma_pop has dimension {dim}, expected {p}")
        if not (self.noise_var >= 0):
            raise ValidationError(f"noise_var must be >= 0, got {self.noise_var!r}")

    @property
    def n(self):
        return self.x.shape[0]

    @property
    def p(self):
        return self.x.shape[1]


@dataclass
class FitResult:
    coefficients: np.ndarray
    lam: float
    smoother_diag: Optional[np.ndarray]
    residuals: np.ndarray
    converged: bool = True
    n_iter: int = 0
    loss_history: Optional[np.ndarray] = None


def _finite(data: Dataset):
    if not (np.all(np.isfinite(data.x)) and np.all(np.isfinite(data.y))):
        raise ValidationError("x and y must be finite")


def _check_lam(lam):
    if not (np.isfinite(lam) and lam >= 0):
        raise DomainError(f"lambda must be finite and >= 0, got {lam!r}")


class SpectralCache:
    """Thin SVD of X reused across a lambda grid."""

    def __init__(self, x):
        self.x = np.asarray(x, dtype=float)
        self.n, self.p = self.x.shape
        self.u, self.s, self.vt = np.linalg.svd(self.x, full_matrices=False)
        smax = self.s[0] if self.s.size else 0.0
        self.cutoff = PINV_RTOL * smax * max(self.n, self.p)
        self.rank = int(np.sum(self.s > self.cutoff))
        near = (self.s > self.cutoff / 10.0) & (self.s < 10.0 * self.cutoff)
        self.ambiguous = bool(np.any(near))

    def warn_if_ambiguous(self):
        if self.ambiguous:
            warnings.warn("singular values lie within 10x of the pseudoinverse cutoff", RankAmbiguityWarning,
                          stacklevel=3)

    def shrink(self, lam):
        """Per-direction factors s/(s^2 + n lam) (pseudoinverse at lam = 0)."""
        s = self.s
        if lam == 0:
            out = np.zeros_like(s)
            k = self.rank
            out[:k] = 1.0 / s[:k]
            return out
        return s / (s * s + self.n * lam)

    def hat_weights(self, lam):
        """Eigenvalues of the smoother S_lam on the columns of U."""
        s = self.s
        if lam == 0:
            out = np.zeros_like(s)
            out[: self.rank] = 1.0
            return out
        s2 = s * s
        return s2 / (s2 + self.n * lam)

    def coefficients(self, y, lam):
        return self.vt.T @ (self.shrink(lam) * (self.u.T @ y))

    def smoother_diag(self, lam):
        return (self.u * self.u) @ self.hat_weights(lam)

    def fitted(self, y, lam):
        return self.u @ (self.hat_weights(lam) * (self.u.T @ y))


def ridge_fit(data: Dataset, lam: float, method: str = "auto", smoother: bool = False) -> FitResult:
    """Ridge estimator minimising (1/n)||y - Xb||^2 + lam ||b||^2.

    ``lam = 0`` gives the min-norm least squares solution.  ``method`` picks
    the primal normal equations, the kernel form, or (``auto``) the cheaper.
    """
    _check_lam(lam)
    _finite(data)
    x, y = data.x, data.y
    n, p = x.shape
    if lam == 0 or method == "svd":
        cache = SpectralCache(x)
        cache.warn_if_ambiguous()
        beta = cache.coefficients(y, lam)
        sdiag = cache.smoother_diag(lam) if smoother else None
    else:
        if method == "auto":
            method = "primal" if p <= n else "kernel"
        if method == "primal":
            a = x.T @ x
            a[np.diag_indices_from(a)] += n * lam
            beta = scipy.linalg.solve(a, x.T @ y, assume_a="pos")
        elif method == "kernel":
            k = x @ x.T
            k[np.diag_indices_from(k)] += n * lam
            beta = x.T @ scipy.linalg.solve(k, y, assume_a="pos")
        else:
            raise ParameterError(f"unknown method {method!r}")
        sdiag = SpectralCache(x).smoother_diag(lam) if smoother else None
    resid = y - x @ beta
    return FitResult(beta, float(lam), sdiag, resid)


def gd_minnorm(data: Dataset, step: Optional[float] = None, tol: float = 1e-10, max_iter: int = 100_000,
               record: bool = False) -> FitResult:
    """Gradient descent on the least-squares loss started at zero."""
    _finite(data)
    x, y = data.x, data.y
    lmax = float(np.linalg.norm(x, 2) ** 2) if x.size else 0.0
    if step is None:
        step = 1.0 / lmax if lmax > 0 else 1.0
    if not (step > 0) or (lmax > 0 and step > (1.0 + 1e-12) / lmax):
        raise DomainError(f"step must lie in (0, 1/lambda_max(X'X)] = (0, {1 / lmax:.6g}], got {step!r}")
    beta = np.zeros(x.shape[1])
    xty = x.T @ y
    target = tol * np.linalg.norm(xty)
    history = [float(y @ y)] if record else None
    grad = xty.copy()
    converged = False
    it = 0
    while it < max_iter:
        if np.linalg.norm(grad) <= target:
            converged = True
            break
        beta = beta + step * grad
        resid = y - x @ beta
        grad = x.T @ resid
        it += 1
        if record:
            history.append(float(resid @ resid))
    else:
        converged = bool(np.linalg.norm(grad) <= target)
    resid = y - x @ beta
    return FitResult(beta, 0.0, None, resid, converged=converged, n_iter=it,
                     loss_history=np.asarray(history) if record else None)


def conditional_risk(x, sigma_pop, beta_true, noise_var: float, lam: float = 0.0,
                     cache: Optional[SpectralCache] = None, misspec_bias: float = 0.0) -> RiskDecomposition:
    """Exact bias and variance of the ridge estimator conditional on X.

    With Sigma_hat = X'X/n, bias is lam^2 <beta, R Sigma R beta> with
    R = (Sigma_hat + lam I)^-1 and variance is
    (sigma^2/n) Tr(Sigma Sigma_hat (Sigma_hat + lam I)^-2).  At ``lam = 0``
    the pseudoinverse forms are used.
    """
    _check_lam(lam)
    x = np.asarray(x, dtype=float)
    n, p = x.shape
    beta = np.asarray(beta_true, dtype=float).ravel()
    if cache is None:
        cache = SpectralCache(x)
    cache.warn_if_ambiguous()
    if lam == 0:
        k = cache.rank
        v = cache.vt[:k].T
        s = cache.s[:k]
        proj = beta - v @ (v.T @ beta)
        bias = float(proj @ apply_sigma(sigma_pop, proj))
        sv = apply_sigma(sigma_pop, v)
        quad = np.einsum("ij,ij->j", v, sv)
        variance = noise_var * float(np.sum(quad / (s * s)))
    else:
        v = cache.vt.T
        d = cache.s ** 2 / n
        coef = v.T @ beta
        # (Sigma_hat + lam)^-1 beta = V (coef/(d+lam)) + (beta - V coef)/lam
        u = v @ (coef / (d + lam)) + (beta - v @ coef) / lam
        bias = lam * lam * float(u @ apply_sigma(sigma_pop, u))
        sv = apply_sigma(sigma_pop, v)
        quad = np.einsum("ij,ij->j", v, sv)
        variance = noise_var / n * float(np.sum(d / (d + lam) ** 2 * quad))
    gamma = p / n
    return RiskDecomposition.build(max(bias, 0.0), variance, gamma, lam=lam, misspec_bias=misspec_bias)


def dataset_risk(data: Dataset, lam: float = 0.0, cache: Optional[SpectralCache] = None) -> RiskDecomposition:
    if data.beta_true is None:
        raise ValidationError("dataset has no beta_true")
    return conditional_risk(data.x, data.sigma_pop, data.beta_true, data.noise_var, lam, cache=cache,
                            misspec_bias=data.misspec_bias)


def _loo_from_cache(cache: SpectralCache, y, lam):
    n = cache.n
    if lam == 0 and cache.p > n:
        if cache.rank < n:
            raise CVUndefinedError(f"ridgeless CV undefined: rank(X) = {cache.rank} < n = {n}")
        # [(XX')^-1 y]_i / [(XX')^-1]_ii
        inv_s2 = 1.0 / cache.s ** 2
        a = cache.u @ (inv_s2 * (cache.u.T @ y))
        diag = (cache.u * cache.u) @ inv_s2
        return float(np.mean((a / diag) ** 2))
    sdiag = cache.smoother_diag(lam)
    resid = y - cache.fitted(y, lam)
    den = 1.0 - sdiag
    bad = np.flatnonzero(np.abs(den) < 1e-12)
    if bad.size:
        raise CVUndefinedError(f"1 - S_ii vanishes at index {int(bad[0])}", index=int(bad[0]))
    return float(np.mean((resid / den) ** 2))


def _gcv_from_cache(cache: SpectralCache, y, lam):
    n = cache.n
    w = cache.hat_weights(lam)
    den = 1.0 - float(np.sum(w)) / n
    if abs(den) < 1e-12:
        raise CVUndefinedError("GCV undefined at the ridgeless limit: Tr(S)/n = 1")
    resid = y - cache.fitted(y, lam)
    return float(np.mean(resid ** 2)) / den ** 2


def loo_cv(data: Dataset, lam: float, cache: Optional[SpectralCache] = None) -> float:
    """Leave-one-out CV error by the smoother shortcut."""
    _check_lam(lam)
    _finite(data)
    return _loo_from_cache(cache or SpectralCache(data.x), data.y, lam)


def gcv(data: Dataset, lam: float, cache: Optional[SpectralCache] = None) -> float:
    """Generalized cross-validation error."""
    _check_lam(lam)
    _finite(data)
    return _gcv_from_cache(cache or SpectralCache(data.x), data.y, lam)


def naive_loo(data: Dataset, lam: float) -> float:
    """Leave-one-out by n explicit refits; the penalty keeps the full-n scaling."""
    _check_lam(lam)
    x, y = data.x, data.y
    n, p = x.shape
    errs = np.empty(n)
    for i in range(n):
        keep = np.arange(n) != i
        xi, yi = x[keep], y[keep]
        if lam == 0:
            b = np.linalg.lstsq(xi, yi, rcond=None)[0]
        else:
            a = xi.T @ xi
            a[np.diag_indices_from(a)] += n * lam
            b = np.linalg.solve(a, xi.T @ yi)
        errs[i] = y[i] - x[i] @ b
    return float(np.mean(errs ** 2))


@dataclass
class TuneResult:
    lambda_hat: float
    index: int
    lambdas: np.ndarray
    curve: np.ndarray
    failures: list


def tune(data: Dataset, lambda_grid: Sequence[float], criterion: str = "cv",
         cache: Optional[SpectralCache] = None) -> TuneResult:
    """Grid argmin of CV or GCV.  Ties go to the smallest lambda; failed grid
    points are skipped and listed in ``failures``."""
    grid = np.asarray(lambda_grid, dtype=float)
    if grid.size == 0:
        raise ParameterError("lambda grid is empty")
    if np.any(grid <= 0) or np.any(np.diff(grid) <= 0):
        raise ParameterError("lambda grid must be strictly positive and increasing")
    if criterion not in ("cv", "gcv"):
        raise ParameterError(f"criterion must be 'cv' or 'gcv', got {criterion!r}")
    _finite(data)
    cache = cache or SpectralCache(data.x)
    fn = _loo_from_cache if criterion == "cv" else _gcv_from_cache
    curve = np.full(grid.size, np.nan)
    failures = []
    for i, lam in enumerate(grid):
        try:
            curve[i] = fn(cache, data.y, lam)
        except CVUndefinedError as exc:
            failures.append((float(lam), str(exc)))
    ok = np.isfinite(curve)
    if not ok.any():
        raise CVUndefinedError("criterion failed at every grid point")
    best = np.nanmin(curve)
    tie = np.flatnonzero(ok & (curve <= best + 1e-12 * abs(best)))
    idx = int(tie[0])
    return TuneResult(float(grid[idx]), idx, grid, curve, failures)
