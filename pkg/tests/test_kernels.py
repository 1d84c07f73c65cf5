import json
import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, strategies as st

from ridgeless import _jit
from ridgeless._kernels import KERNELS

spectra = st.lists(st.tuples(st.floats(0.01, 30.0), st.floats(0.01, 1.0)), min_size=1, max_size=10)

pytestmark = pytest.mark.skipif(not _jit.NUMBA_AVAILABLE, reason="numba not importable")


def arrays(pairs):
    a = np.array([p[0] for p in pairs])
    w = np.array([p[1] for p in pairs])
    return a, w / w.sum()


@given(spectra, st.floats(1.05, 50.0))
def test_c0_parity(pairs, gamma):
    a, w = arrays(pairs)
    x = KERNELS["numba"]["c0_bisect"](a, w, gamma, 1e-12, 200, 60)
    y = KERNELS["numpy"]["c0_bisect"](a, w, gamma, 1e-12, 200, 60)
    assert x[2] == y[2] == 0
    assert x[0] == pytest.approx(y[0], rel=1e-10)


@given(spectra, st.floats(1.05, 50.0))
def test_v0_parity(pairs, gamma):
    a, w = arrays(pairs)
    x = KERNELS["numba"]["v0_bisect"](a, w, gamma, 1e-12, 200, 60)
    y = KERNELS["numpy"]["v0_bisect"](a, w, gamma, 1e-12, 200, 60)
    assert x[0] == pytest.approx(y[0], rel=1e-10)


@given(spectra, st.floats(0.05, 50.0), st.floats(1e-6, 100.0))
def test_companion_parity(pairs, gamma, lam):
    a, w = arrays(pairs)
    x = KERNELS["numba"]["companion_bisect"](a, w, gamma, lam, 200)
    y = KERNELS["numpy"]["companion_bisect"](a, w, gamma, lam, 200)
    assert x[0] == pytest.approx(y[0], rel=1e-12)


PROBE = """
import json
from ridgeless import backend, laurent_variance, resolvent_general, ridge_risk, build_geometry, AR1
r = resolvent_general(0.3 + 0.7j, 0.6, 0.2, 1.5, 0.4, 0.3)
geom = build_geometry(AR1(rho=0.5, r2=1.0, sigma2=1.0, p_for_quadrature=300))
print(json.dumps({"backend": backend(), "d0": laurent_variance(2.0, 0.5, 0.0).d0,
                  "m1": [r.m1.real, r.m1.imag], "ridge": ridge_risk(geom, 2.0, 1.0, 0.3).total}))
"""


def _probe(flag):
    env = dict(os.environ, RRL_DISABLE_JIT=flag)
    out = subprocess.run([sys.executable, "-c", PROBE], env=env, capture_output=True, text=True, check=True)
    return json.loads(out.stdout.strip().splitlines()[-1])


def test_env_flag_switches_backend_with_same_results():
    fast, slow = _probe("0"), _probe("1")
    assert fast["backend"] == "numba" and slow["backend"] == "numpy"
    assert fast["d0"] == pytest.approx(slow["d0"], abs=1e-8)
    assert fast["m1"] == pytest.approx(slow["m1"], abs=1e-10)
    assert fast["ridge"] == pytest.approx(slow["ridge"], rel=1e-10)
