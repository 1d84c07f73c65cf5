"""Compare the numba and numpy backends.

Root-finding kernels are timed in-process through the kernel table.  The
resolvent continuation is timed end to end in two subprocesses, one with
RRL_DISABLE_JIT=1, since the backend is fixed at import time.

    python3 benchmarks/bench_kernels.py [--repeat N]
"""
import argparse
import json
import os
import subprocess
import sys
import timeit

import numpy as np

from ridgeless._kernels import KERNELS

RESOLVENT_PROBE = """
import json, timeit
from ridgeless import backend, laurent_variance, resolvent_general
resolvent_general(0.3 + 0.7j, 0.6, 0.2, 1.5, 0.4, 0.3)
t_res = min(timeit.repeat(lambda: resolvent_general(0.3 + 0.7j, 0.6, 0.2, 1.5, 0.4, 0.3), number=20, repeat={r})) / 20
t_lau = min(timeit.repeat(lambda: laurent_variance(2.0, 0.5, 0.0), number=1, repeat={r}))
print(json.dumps({{"backend": backend(), "resolvent_general": t_res, "laurent_variance": t_lau}}))
"""


def spectrum(k, rng):
    w = rng.uniform(0.1, 1.0, k)
    return np.sort(rng.uniform(0.05, 20.0, k))[::-1], w / w.sum()


def bench_roots(repeat):
    rng = np.random.default_rng(0)
    rows = []
    for k in (4, 200, 5000):
        a, w = spectrum(k, rng)
        for name, args in (("c0_bisect", (a, w, 2.0, 1e-12, 200, 60)),
                           ("v0_bisect", (a, w, 2.0, 1e-12, 200, 60)),
                           ("companion_bisect", (a, w, 2.0, 0.3, 200))):
            times = {}
            for be in ("numba", "numpy"):
                fn = KERNELS[be][name]
                fn(*args)  # compile / warm up
                times[be] = min(timeit.repeat(lambda: fn(*args), number=50, repeat=repeat)) / 50
            rows.append((name, k, times["numba"], times["numpy"]))
    return rows


def bench_resolvent(repeat):
    out = {}
    for flag in ("0", "1"):
        env = dict(os.environ, RRL_DISABLE_JIT=flag)
        proc = subprocess.run([sys.executable, "-c", RESOLVENT_PROBE.format(r=repeat)], env=env,
                              capture_output=True, text=True, check=True)
        res = json.loads(proc.stdout.strip().splitlines()[-1])
        out[res.pop("backend")] = res
    return out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    print(f"{'kernel':<22}{'atoms':>7}{'numba [us]':>14}{'numpy [us]':>14}{'speedup':>10}")
    for name, k, tn, tp in bench_roots(args.repeat):
        print(f"{name:<22}{k:>7}{tn * 1e6:>14.2f}{tp * 1e6:>14.2f}{tp / tn:>10.1f}")
    res = bench_resolvent(args.repeat)
    for name in ("resolvent_general", "laurent_variance"):
        tn, tp = res["numba"][name], res["numpy"][name]
        print(f"{name:<22}{'-':>7}{tn * 1e6:>14.1f}{tp * 1e6:>14.1f}{tp / tn:>10.1f}")


if __name__ == "__main__":
    main()
