"""Hot inner loops: monotone bisection over discrete spectra and the damped
fixed-point/Newton continuation for the nonlinear resolvent system.

Every kernel has a loop form (``*_nb``, numba-compiled when possible) and a
numpy form (``*_vec``).  The module-level names dispatch on
:data:`ridgeless._jit.USE_NUMBA`.  Status codes: 0 ok, 1 bracket not found,
2 iteration cap reached, 3 continuation failed.
"""
import numpy as np

from ._jit import USE_NUMBA, jit

_EPS = 2.220446049250313e-16


# ---------------------------------------------------------------------------
# bisection kernels
# ---------------------------------------------------------------------------


def _c0_bisect_loop(atoms, weights, gamma, tol, maxiter, maxexpand):
    target = 1.0 - 1.0 / gamma

    def f(c):
        acc = 0.0
        for k in range(atoms.shape[0]):
            acc += weights[k] / (1.0 + c * gamma * atoms[k])
        return acc - target

    lo = 0.0
    hi = 1.0
    n_exp = 0
    while f(hi) > 0.0:
        lo = hi
        hi *= 2.0
        n_exp += 1
        if n_exp > maxexpand:
            return hi, f(hi), 1
    mid = 0.5 * (lo + hi)
    fm = f(mid)
    for _ in range(maxiter):
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if fm == 0.0 or hi - lo <= 4.0 * _EPS * hi:
            break
        if fm > 0.0:
            lo = mid
        else:
            hi = mid
    status = 0 if abs(fm) < tol else 2
    return mid, fm, status


def _c0_bisect_vec(atoms, weights, gamma, tol, maxiter, maxexpand):
    target = 1.0 - 1.0 / gamma

    def f(c):
        return float(np.dot(weights, 1.0 / (1.0 + c * gamma * atoms))) - target

    lo, hi = 0.0, 1.0
    n_exp = 0
    while f(hi) > 0.0:
        lo, hi = hi, 2.0 * hi
        n_exp += 1
        if n_exp > maxexpand:
            return hi, f(hi), 1
    mid = 0.5 * (lo + hi)
    fm = f(mid)
    for _ in range(maxiter):
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if fm == 0.0 or hi - lo <= 4.0 * _EPS * hi:
            break
        if fm > 0.0:
            lo = mid
        else:
            hi = mid
    return mid, fm, (0 if abs(fm) < tol else 2)


def _v0_bisect_loop(atoms, weights, gamma, tol, maxiter, maxexpand):
    # h(v) = 1 - gamma * int s v / (1 + s v) dH, decreasing from 1 to 1 - gamma
    def h(v):
        acc = 0.0
        for k in range(atoms.shape[0]):
            sv = atoms[k] * v
            acc += weights[k] * sv / (1.0 + sv)
        return 1.0 - gamma * acc

    lo = 0.0
    hi = 1.0
    n_exp = 0
    while h(hi) > 0.0:
        lo = hi
        hi *= 2.0
        n_exp += 1
        if n_exp > maxexpand:
            return hi, h(hi), 1
    mid = 0.5 * (lo + hi)
    hm = h(mid)
    for _ in range(maxiter):
        mid = 0.5 * (lo + hi)
        hm = h(mid)
        if hm == 0.0 or hi - lo <= 4.0 * _EPS * hi:
            break
        if hm > 0.0:
            lo = mid
        else:
            hi = mid
    status = 0 if abs(hm) < tol else 2
    return mid, hm, status


def _v0_bisect_vec(atoms, weights, gamma, tol, maxiter, maxexpand):
    def h(v):
        sv = atoms * v
        return 1.0 - gamma * float(np.dot(weights, sv / (1.0 + sv)))

    lo, hi = 0.0, 1.0
    n_exp = 0
    while h(hi) > 0.0:
        lo, hi = hi, 2.0 * hi
        n_exp += 1
        if n_exp > maxexpand:
            return hi, h(hi), 1
    mid = 0.5 * (lo + hi)
    hm = h(mid)
    for _ in range(maxiter):
        mid = 0.5 * (lo + hi)
        hm = h(mid)
        if hm == 0.0 or hi - lo <= 4.0 * _EPS * hi:
            break
        if hm > 0.0:
            lo = mid
        else:
            hi = mid
    return mid, hm, (0 if abs(hm) < tol else 2)


def _companion_bisect_loop(atoms, weights, gamma, lam, maxiter):
    # solves x = lam + gamma * int s x / (s + x) dH for x > 0; the map
    # g(x) = 1 - lam/x - gamma int s/(s+x) dH is increasing, bracket is exact
    mean_s = 0.0
    for k in range(atoms.shape[0]):
        mean_s += weights[k] * atoms[k]
    lo = lam
    hi = lam + gamma * mean_s
    if hi <= lo:
        return lo, 0.0, 0
    if lam == 0.0:
        lo = 0.0
    mid = 0.5 * (lo + hi)
    gm = 0.0
    for _ in range(maxiter):
        mid = 0.5 * (lo + hi)
        acc = 0.0
        for k in range(atoms.shape[0]):
            acc += weights[k] * atoms[k] / (atoms[k] + mid)
        gm = 1.0 - lam / mid - gamma * acc
        if gm == 0.0 or hi - lo <= 4.0 * _EPS * hi:
            break
        if gm < 0.0:
            lo = mid
        else:
            hi = mid
    return mid, gm, 0


def _companion_bisect_vec(atoms, weights, gamma, lam, maxiter):
    mean_s = float(np.dot(weights, atoms))
    lo, hi = lam, lam + gamma * mean_s
    if hi <= lo:
        return lo, 0.0, 0
    if lam == 0.0:
        lo = 0.0
    mid = 0.5 * (lo + hi)
    gm = 0.0
    for _ in range(maxiter):
        mid = 0.5 * (lo + hi)
        gm = 1.0 - lam / mid - gamma * float(np.dot(weights, atoms / (atoms + mid)))
        if gm == 0.0 or hi - lo <= 4.0 * _EPS * hi:
            break
        if gm < 0.0:
            lo = mid
        else:
            hi = mid
    return mid, gm, 0


# ---------------------------------------------------------------------------
# nonlinear resolvent system
# ---------------------------------------------------------------------------


def _resolvent_map(m1, m2, xi, s, t, gamma, psi, c1):
    k = c1 * m2 - t
    f2 = 1.0 / (-xi - gamma * m1 + gamma * c1 * m1 * m1 * k / (m1 * k - psi))
    num = (t * t / psi) * m1 * m1 * k - 2.0 * t * c1 * m1 * m2 + c1 * c1 * m1 * m2 * m2
    f1 = 1.0 / (-xi - s - (t * t / psi) * m1 - m2 + num / (m1 * (c1 * m2 - psi) - psi))
    return f1, f2


def _solve_point(m1, m2, xi, s, t, gamma, psi, c1, damping, tol, max_fp, max_newton):
    f1, f2 = _resolvent_map(m1, m2, xi, s, t, gamma, psi, c1)
    for _ in range(max_fp):
        r = abs(f1 - m1) + abs(f2 - m2)
        if r < tol:
            break
        m1 = m1 + damping * (f1 - m1)
        m2 = m2 + damping * (f2 - m2)
        f1, f2 = _resolvent_map(m1, m2, xi, s, t, gamma, psi, c1)
    # Newton on R(m) = m - F(m), holomorphic in (m1, m2); also polishes the
    # fixed point to near machine precision
    for _ in range(max_newton):
        r1 = m1 - f1
        r2 = m2 - f2
        if abs(r1) + abs(r2) < 1e-15 * (1.0 + abs(m1) + abs(m2)):
            break
        h1 = 1e-7 * (1.0 + abs(m1))
        h2 = 1e-7 * (1.0 + abs(m2))
        a1, a2 = _resolvent_map(m1 + h1, m2, xi, s, t, gamma, psi, c1)
        b1, b2 = _resolvent_map(m1, m2 + h2, xi, s, t, gamma, psi, c1)
        j11 = ((m1 + h1 - a1) - r1) / h1
        j21 = ((m2 - a2) - r2) / h1
        j12 = ((m1 - b1) - r1) / h2
        j22 = ((m2 + h2 - b2) - r2) / h2
        det = j11 * j22 - j12 * j21
        if det == 0:
            break
        d1 = (j22 * r1 - j12 * r2) / det
        d2 = (-j21 * r1 + j11 * r2) / det
        m1 = m1 - d1
        m2 = m2 - d2
        f1, f2 = _resolvent_map(m1, m2, xi, s, t, gamma, psi, c1)
    r = abs(f1 - m1) + abs(f2 - m2)
    return m1, m2, r


def _resolvent_path_impl(xi_re, xi_im, s, t, gamma, psi, c1, eta0, ratio,
                         damping, tol, max_fp, max_newton, m1, m2, warm):
    """Continue the solution from Im(xi) = eta0 down to the target.

    Returns (m1, m2, residual, status, last_good_eta).
    """
    floor = 1e-9
    if warm:
        eta = xi_im
    else:
        eta = eta0 if eta0 > xi_im else xi_im
    if not warm:
        xs = complex(xi_re, eta)
        m1 = -1.0 / xs
        m2 = -1.0 / xs
    last_good = np.inf
    while True:
        xs = complex(xi_re, eta)
        m1n, m2n, r = _solve_point(m1, m2, xs, s, t, gamma, psi, c1,
                                   damping, tol, max_fp, max_newton)
        if not (r < tol) or m1n != m1n or m2n != m2n:
            return m1, m2, r, 3, last_good
        m1, m2 = m1n, m2n
        last_good = eta
        if eta == xi_im:
            return m1, m2, r, 0, last_good
        nxt = eta * ratio
        if nxt <= xi_im or (xi_im == 0.0 and nxt < floor):
            eta = xi_im
        else:
            eta = nxt


_c0_bisect_nb = jit(_c0_bisect_loop)
_v0_bisect_nb = jit(_v0_bisect_loop)
_companion_bisect_nb = jit(_companion_bisect_loop)
_resolvent_path_nb = None
if USE_NUMBA:
    # inner helpers must be compiled for the compiled path to call them
    _resolvent_map = jit(_resolvent_map)
    _solve_point = jit(_solve_point)
    _resolvent_path_nb = jit(_resolvent_path_impl)


def c0_bisect(atoms, weights, gamma, tol=1e-12, maxiter=200, maxexpand=60):
    fn = _c0_bisect_nb if USE_NUMBA else _c0_bisect_vec
    return fn(atoms, weights, float(gamma), tol, maxiter, maxexpand)


def v0_bisect(atoms, weights, gamma, tol=1e-12, maxiter=200, maxexpand=60):
    fn = _v0_bisect_nb if USE_NUMBA else _v0_bisect_vec
    return fn(atoms, weights, float(gamma), tol, maxiter, maxexpand)


def companion_bisect(atoms, weights, gamma, lam, maxiter=200):
    fn = _companion_bisect_nb if USE_NUMBA else _companion_bisect_vec
    return fn(atoms, weights, float(gamma), float(lam), maxiter)


def resolvent_path(xi, s, t, gamma, psi, c1, eta0=10.0, ratio=0.8, damping=0.5,
                   tol=1e-10, max_fp=2000, max_newton=30, init=None):
    xi = complex(xi)
    warm = init is not None
    m1, m2 = (complex(init[0]), complex(init[1])) if warm else (0j, 0j)
    fn = _resolvent_path_nb if USE_NUMBA else _resolvent_path_impl
    return fn(xi.real, xi.imag, float(s), float(t), float(gamma), float(psi), float(c1),
              float(eta0), float(ratio), float(damping), float(tol), int(max_fp),
              int(max_newton), m1, m2, warm)


KERNELS = {
    "numba": {
        "c0_bisect": _c0_bisect_nb,
        "v0_bisect": _v0_bisect_nb,
        "companion_bisect": _companion_bisect_nb,
    },
    "numpy": {
        "c0_bisect": _c0_bisect_vec,
        "v0_bisect": _v0_bisect_vec,
        "companion_bisect": _companion_bisect_vec,
    },
}
