"""Seeded data generation for every model and a Monte Carlo harness for
finite-sample risk curves.

Per-rep random streams come from ``numpy.random.SeedSequence`` keyed by
``(master_seed, point, rep)``; results are reduced in (point, rep) order so
they do not depend on the worker count.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
import scipy.linalg
from scipy.integrate import quad

from .errors import DomainError, ParameterError, RRLError, ValidationError
from .estimators import (Dataset, LowRankPlusIdentity, SpectralCache, _gcv_from_cache, _loo_from_cache,
                         apply_sigma, dataset_risk)
from .spectra import AR1, Custom, Equicorrelated, Isotropic, Latent, Misspecified, Nonlinear, model_tag

DEFAULT_SEED = 0x5EED
BOUNDARY_BAND = 0.05


# ---------------------------------------------------------------------------
# activations
# ---------------------------------------------------------------------------

ABS_A = math.sqrt(math.pi / (math.pi - 2.0))
ABS_B = math.sqrt(2.0 / math.pi)


@dataclass(frozen=True)
class Activation:
    """Standardised activation phi(t) = a * (f(t) - b).

    ``c1`` is E[G phi(G)]^2 for G ~ N(0, 1); it is zero for the purely
    nonlinear absolute-value activation.
    """

    kind: str
    a: float
    b: float
    c1: float
    fn: Optional[Callable] = field(default=None, compare=False)

    def __call__(self, t):
        if self.kind == "abs":
            return self.a * (np.abs(t) - self.b)
        return self.a * (self.fn(t) - self.b)

    @classmethod
    def purely_nonlinear_abs(cls) -> "Activation":
        return cls("abs", ABS_A, ABS_B, 0.0)

    @classmethod
    def custom(cls, fn: Callable) -> "Activation":
        """Standardise ``fn`` under N(0, 1) by adaptive quadrature split at 0,
        where common activations have their kink."""

        def f(t):
            return float(np.asarray(fn(np.array([t]))).ravel()[0])

        def gauss(h):
            dens = lambda t: h(t) * math.exp(-0.5 * t * t) / math.sqrt(2.0 * math.pi)
            return sum(quad(dens, lo, hi, epsabs=1e-13, epsrel=1e-12, limit=200)[0]
                       for lo, hi in ((-math.inf, 0.0), (0.0, math.inf)))

        mean = gauss(f)
        var = gauss(lambda t: (f(t) - mean) ** 2)
        if not (var > 0):
            raise ParameterError("activation is constant under N(0, 1)")
        a = 1.0 / math.sqrt(var)
        c1 = (a * gauss(lambda t: t * f(t))) ** 2
        return cls("custom", a, mean, c1, fn)


def resolve_activation(act) -> Activation:
    if isinstance(act, Activation):
        return act
    if act in (None, "abs", "purely_nonlinear_abs"):
        return Activation.purely_nonlinear_abs()
    if callable(act):
        return Activation.custom(act)
    raise ParameterError(f"unknown activation {act!r}")


def abs_feature_covariance(w: np.ndarray) -> np.ndarray:
    """Exact E[phi(w_i'z) phi(w_j'z)] for the standardised absolute value."""
    nr = np.linalg.norm(w, axis=1)
    gram = w @ w.T
    outer = np.outer(nr, nr)
    with np.errstate(invalid="ignore", divide="ignore"):
        rho = np.where(outer > 0, gram / outer, 0.0)
    rho = np.clip(rho, -1.0, 1.0)
    e_ab = (2.0 / math.pi) * outer * (np.sqrt(1.0 - rho * rho) + rho * np.arcsin(rho))
    e_a = ABS_B * nr
    sigma = ABS_A ** 2 * (e_ab - ABS_B * e_a[:, None] - ABS_B * e_a[None, :] + ABS_B ** 2)
    return 0.5 * (sigma + sigma.T)


# ---------------------------------------------------------------------------
# seeding and small helpers
# ---------------------------------------------------------------------------


def rep_rng(master_seed: int, point: int, rep: int) -> np.random.Generator:
    ss = np.random.SeedSequence(int(master_seed) & (2 ** 64 - 1), spawn_key=(int(point), int(rep)))
    return np.random.Generator(np.random.PCG64(ss))


def sphere(rng, p: int, radius: float) -> np.ndarray:
    v = rng.standard_normal(p)
    nv = np.linalg.norm(v)
    return v * (radius / nv) if nv > 0 else v


def latent_frame(p: int, d: int, rng) -> np.ndarray:
    """p x d matrix with unit rows and W'W = (p/d) I.

    Built from a real harmonic frame (constant, cosine and sine columns at
    distinct low frequencies), rotated on the right by a Haar orthogonal
    matrix so the column space is random.
    """
    if not (1 <= d <= p):
        raise ParameterError(f"latent dimension must satisfy 1 <= d <= p, got d={d}, p={p}")
    if d == p:
        base = np.eye(p)
    else:
        j = np.arange(p)[:, None]
        cols = []
        if d % 2 == 1:
            cols.append(np.ones((p, 1)))
        k = np.arange(1, d // 2 + 1)[None, :]
        ang = 2.0 * math.pi * j * k / p
        cols.append(math.sqrt(2.0) * np.cos(ang))
        cols.append(math.sqrt(2.0) * np.sin(ang))
        base = np.hstack(cols) / math.sqrt(d)
    return base @ _haar(d, rng)


def _haar(d, rng):
    q, r = np.linalg.qr(rng.standard_normal((d, d)))
    return q * np.sign(np.diag(r))


def _quantile_counts(weights, p):
    raw = np.asarray(weights) * p
    counts = np.floor(raw).astype(int)
    short = p - counts.sum()
    order = np.argsort(-(raw - counts), kind="stable")
    counts[order[:short]] += 1
    return counts


# ---------------------------------------------------------------------------
# data generation
# ---------------------------------------------------------------------------


def latent_dim(spec, p: int) -> int:
    d = int(spec.d) if spec.d is not None else int(round(spec.psi * p))
    if d < 1:
        raise ParameterError(f"latent dimension round(psi*p) = {d} is zero (psi={spec.psi}, p={p})")
    return d


def gen_dataset(spec, n: int, p: int, seed: int = DEFAULT_SEED, beta=None, rng=None) -> Dataset:
    """Draw one dataset (X, y, beta, Sigma) from ``spec``.

    Misspecified and latent models are returned in their equivalent linear
    form: ``beta_true``/``sigma_pop`` describe the best linear predictor,
    ``noise_var`` is the effective noise and ``misspec_bias`` the
    irreducible part.
    """
    if n < 1 or p < 1:
        raise ParameterError(f"n and p must be >= 1, got n={n}, p={p}")
    if rng is None:
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed) & (2 ** 64 - 1))))
    gamma = p / n
    meta = {"gamma": gamma}

    def _beta(radius2):
        if beta is not None:
            b = np.asarray(beta, dtype=float).ravel()
            if b.size != p:
                raise ValidationError(f"beta has length {b.size}, expected {p}")
            return b
        return sphere(rng, p, math.sqrt(radius2))

    if isinstance(spec, Isotropic):
        x = rng.standard_normal((n, p))
        b = _beta(spec.r2)
        y = x @ b + math.sqrt(spec.sigma2) * rng.standard_normal(n)
        return Dataset(x, y, b, None, spec.sigma2, seed, spec, meta=meta)

    if isinstance(spec, Equicorrelated):
        z = rng.standard_normal((n, p))
        g = rng.standard_normal((n, 1))
        x = math.sqrt(1.0 - spec.rho) * z + math.sqrt(spec.rho) * g
        sig = LowRankPlusIdentity(np.full(p, math.sqrt(spec.rho)), scale=1.0 - spec.rho)
        b = _beta(spec.r2)
        y = x @ b + math.sqrt(spec.sigma2) * rng.standard_normal(n)
        return Dataset(x, y, b, sig, spec.sigma2, seed, spec, meta=meta)

    if isinstance(spec, AR1):
        z = rng.standard_normal((n, p))
        x = np.empty_like(z)
        x[:, 0] = z[:, 0]
        c = math.sqrt(1.0 - spec.rho ** 2)
        for j in range(1, p):
            x[:, j] = spec.rho * x[:, j - 1] + c * z[:, j]
        sig = scipy.linalg.toeplitz(spec.rho ** np.arange(p))
        b = _beta(spec.r2)
        y = x @ b + math.sqrt(spec.sigma2) * rng.standard_normal(n)
        return Dataset(x, y, b, sig, spec.sigma2, seed, spec, meta=meta)

    if isinstance(spec, Custom):
        geom = spec.geometry
        counts = _quantile_counts(geom.h.weights, p)
        diag = np.repeat(geom.h.atoms, counts)
        z = rng.standard_normal((n, p))
        x = z * np.sqrt(diag)
        if beta is None:
            b = np.zeros(p)
            starts = np.concatenate([[0], np.cumsum(counts)])
            for a, w in zip(geom.g.atoms, geom.g.weights):
                k = int(np.flatnonzero(geom.h.atoms == a)[0])
                lo, hi = starts[k], starts[k + 1]
                if hi == lo:
                    raise ValidationError(f"p={p} too small to represent G atom {a!r}")
                b[lo:hi] = sphere(rng, hi - lo, math.sqrt(geom.beta_norm_sq * w))
        else:
            b = _beta(geom.beta_norm_sq)
        y = x @ b + math.sqrt(spec.sigma2) * rng.standard_normal(n)
        return Dataset(x, y, b, diag, spec.sigma2, seed, spec, meta=meta)

    if isinstance(spec, Misspecified):
        kappa = spec.kappa_at(gamma)
        q = p
        x = rng.standard_normal((n, p))
        w_hidden = rng.standard_normal((n, q))
        b = _beta(spec.r2 * kappa)
        theta = sphere(rng, q, math.sqrt(spec.r2 * (1.0 - kappa)))
        y = x @ b + w_hidden @ theta + math.sqrt(spec.sigma2) * rng.standard_normal(n)
        miss = float(theta @ theta)
        meta.update(kappa=kappa, q=q)
        return Dataset(x, y, b, None, spec.sigma2 + miss, seed, spec, misspec_bias=miss, meta=meta)

    if isinstance(spec, Latent):
        d = latent_dim(spec, p)
        w = latent_frame(p, d, rng)
        z = rng.standard_normal((n, d))
        u = rng.standard_normal((n, p))
        x = z @ w.T + u
        theta = sphere(rng, d, math.sqrt(spec.r_theta2))
        y = z @ theta + math.sqrt(spec.sigma_xi2) * rng.standard_normal(n)
        shrink = 1.0 + p / d
        b = w @ theta / shrink
        noise = spec.sigma_xi2 + float(theta @ theta) / shrink
        meta.update(d=d, psi=d / p, w=w, theta=theta)
        return Dataset(x, y, b, LowRankPlusIdentity(w), noise, seed, spec, meta=meta)

    if isinstance(spec, Nonlinear):
        act = resolve_activation(spec.activation)
        d = latent_dim(spec, p)
        w = rng.standard_normal((p, d)) / math.sqrt(d)
        z = rng.standard_normal((n, d))
        x = act(z @ w.T)
        if act.kind == "abs":
            sig = abs_feature_covariance(w)
        else:
            # first-order (linear-part) approximation of the feature covariance
            gram = w @ w.T
            sig = act.c1 * gram
            sig[np.diag_indices_from(sig)] = 1.0
        b = _beta(spec.r2)
        y = x @ b + math.sqrt(spec.sigma2) * rng.standard_normal(n)
        meta.update(d=d, psi=d / p, c1=act.c1)
        return Dataset(x, y, b, sig, spec.sigma2, seed, spec, meta=meta)

    raise ParameterError(f"unsupported model {type(spec).__name__}")


# ---------------------------------------------------------------------------
# Monte Carlo harness
# ---------------------------------------------------------------------------


def worker_count(threads: Optional[int] = None) -> int:
    if threads is not None:
        return max(1, int(threads))
    env = os.environ.get("RRL_THREADS", "").strip()
    cap = int(env) if env.isdigit() and int(env) > 0 else (os.cpu_count() or 1)
    return max(1, min(cap, os.cpu_count() or 1))


def _map_ordered(fn, items, threads):
    workers = worker_count(threads)
    if workers == 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


@dataclass(frozen=True)
class PointRecord:
    gamma: float
    n: int
    p: int
    lam: float
    mean_bias: float
    mean_variance: float
    mean_misspec: float
    mean_total: float
    stderr_total: float
    reps: int
    failed: int
    valid: bool

    def as_dict(self):
        return {
            "gamma": self.gamma, "n": self.n, "p": self.p, "lambda": self.lam,
            "mean_bias": self.mean_bias, "mean_variance": self.mean_variance,
            "mean_misspec": self.mean_misspec, "mean_total": self.mean_total,
            "stderr_total": self.stderr_total, "reps": self.reps, "failed": self.failed,
            "valid": self.valid,
        }


@dataclass(frozen=True)
class SimulationResult:
    records: tuple
    master_seed: int
    model_tag: str


def _stderr(vals):
    vals = np.asarray(vals, dtype=float)
    if vals.size < 2:
        return 0.0
    return float(np.std(vals, ddof=1) / math.sqrt(vals.size))


def _risk_job(args):
    spec, n, p, lam, master_seed, point, rep = args
    rng = rep_rng(master_seed, point, rep)
    try:
        data = gen_dataset(spec, n, p, seed=master_seed, rng=rng)
        r = dataset_risk(data, lam)
        return (r.bias, r.variance, r.misspec_bias, r.total)
    except (RRLError, np.linalg.LinAlgError, ArithmeticError):
        return None


def mc_risk_curve(spec, n: int, gamma_grid: Sequence[float], lam: float = 0.0, reps: int = 50,
                  master_seed: int = DEFAULT_SEED, force: bool = False,
                  threads: Optional[int] = None) -> SimulationResult:
    """Mean exact conditional risk over ``reps`` draws at each gamma."""
    if reps < 1:
        raise ParameterError(f"reps must be >= 1, got {reps}")
    if not (lam >= 0):
        raise ParameterError(f"lambda must be >= 0, got {lam!r}")
    grid = [float(g) for g in gamma_grid]
    if not grid:
        raise ParameterError("gamma grid is empty")
    for g in grid:
        if not (g > 0):
            raise ParameterError(f"gamma must be > 0, got {g!r}")
        if abs(g - 1.0) < BOUNDARY_BAND and not force:
            raise DomainError(f"gamma = {g} is within {BOUNDARY_BAND} of the interpolation boundary")
    ps = [max(1, int(round(g * n))) for g in grid]
    jobs = [(spec, n, p, lam, master_seed, i, r) for i, p in enumerate(ps) for r in range(reps)]
    out = _map_ordered(_risk_job, jobs, threads)
    records = []
    for i, (g, p) in enumerate(zip(grid, ps)):
        chunk = [o for o in out[i * reps:(i + 1) * reps] if o is not None]
        failed = reps - len(chunk)
        if chunk:
            arr = np.asarray(chunk)
            means = arr.mean(axis=0)
            se = _stderr(arr[:, 3])
        else:
            means = np.full(4, np.nan)
            se = np.nan
        records.append(PointRecord(g, n, p, float(lam), float(means[0]), float(means[1]), float(means[2]),
                                   float(means[3]), se, reps, failed, failed <= 0.1 * reps))
    return SimulationResult(tuple(records), int(master_seed), model_tag(spec))


@dataclass(frozen=True)
class CVSimulationResult:
    gamma: float
    n: int
    p: int
    lambdas: np.ndarray
    mean_cv: np.ndarray
    stderr_cv: np.ndarray
    mean_gcv: np.ndarray
    stderr_gcv: np.ndarray
    noise_var: float
    tuned_lambda: np.ndarray  # per rep, CV-selected
    tuned_risk_mean: float
    tuned_risk_stderr: float
    gcv_tuned_risk_mean: float
    gcv_tuned_risk_stderr: float
    reps: int
    failed: int
    master_seed: int
    model_tag: str


def _realized_risk(beta_hat, beta, sigma_pop):
    e = beta_hat - beta
    return float(e @ apply_sigma(sigma_pop, e))


def _cv_job(args):
    spec, n, p, grid, master_seed, rep = args
    rng = rep_rng(master_seed, 0, rep)
    try:
        data = gen_dataset(spec, n, p, seed=master_seed, rng=rng)
        cache = SpectralCache(data.x)
        cv = np.array([_loo_from_cache(cache, data.y, l) for l in grid])
        gc = np.array([_gcv_from_cache(cache, data.y, l) for l in grid])
        k_cv = int(np.flatnonzero(cv <= cv.min() + 1e-12 * abs(cv.min()))[0])
        k_gcv = int(np.flatnonzero(gc <= gc.min() + 1e-12 * abs(gc.min()))[0])
        r_cv = _realized_risk(cache.coefficients(data.y, grid[k_cv]), data.beta_true, data.sigma_pop)
        r_gcv = _realized_risk(cache.coefficients(data.y, grid[k_gcv]), data.beta_true, data.sigma_pop)
        return cv, gc, grid[k_cv], r_cv, r_gcv, data.noise_var
    except (RRLError, np.linalg.LinAlgError, ArithmeticError):
        return None


def mc_cv_curve(spec, n: int, gamma: float, lambda_grid: Sequence[float], reps: int = 20,
                master_seed: int = DEFAULT_SEED, threads: Optional[int] = None) -> CVSimulationResult:
    """Mean CV/GCV curves and the realized risk of the CV-tuned estimator."""
    grid = np.asarray(lambda_grid, dtype=float)
    if grid.size == 0 or np.any(grid <= 0) or np.any(np.diff(grid) <= 0):
        raise ParameterError("lambda grid must be nonempty, strictly positive and increasing")
    if reps < 1:
        raise ParameterError(f"reps must be >= 1, got {reps}")
    p = max(1, int(round(gamma * n)))
    out = _map_ordered(_cv_job, [(spec, n, p, grid, master_seed, r) for r in range(reps)], threads)
    good = [o for o in out if o is not None]
    failed = reps - len(good)
    if not good:
        raise RRLError("every CV replicate failed")
    cv = np.array([o[0] for o in good])
    gc = np.array([o[1] for o in good])
    k = len(good)
    root = math.sqrt(k)

    def se(a):
        return a.std(axis=0, ddof=1) / root if k > 1 else np.zeros(a.shape[1:])

    rc = np.array([o[3] for o in good])
    rg = np.array([o[4] for o in good])
    return CVSimulationResult(
        float(gamma), n, p, grid, cv.mean(axis=0), se(cv), gc.mean(axis=0), se(gc), float(good[0][5]),
        np.array([o[2] for o in good]), float(rc.mean()), _stderr(rc), float(rg.mean()), _stderr(rg),
        reps, failed, int(master_seed), model_tag(spec))
