"""Compiled kernels against their plain-Python fallbacks.

    python benchmarks/bench_kernels.py [--repeat 5] [--end-to-end]

Each kernel is timed twice in the same process: once through the numba
dispatcher and once through ``py_func``.  ``--end-to-end`` also times a
full preset run in two subprocesses, one with ``PIPEWFT_DISABLE_NUMBA=1``.
"""

import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from pipewft import _accel
from pipewft import _kernels as K


def cases(rng):
    n = 400
    fam = rng.integers(1, 4, n).astype(np.int64)
    sig = rng.uniform(-0.01, 0.01, n)
    x = np.sort(rng.uniform(-5.0, 5.0, n))
    s = rng.uniform(-1.5, 1.5, n)
    kind = rng.integers(0, 3, n).astype(np.int64)
    return {
        "riemann_middle_density": (K.riemann_middle_density, (1.0, 1.4, 1.0, 0.2, 0.8, -0.1), 2000),
        "stationary_alpha": (K.stationary_alpha, (1.0, 1.0, 1.0, 1.0, 0.4, 1.1, 1e-12, 0.99), 200),
        "next_collision": (K.next_collision, (x, s, kind, 1e-13), 200),
        "approaching_mass": (K.approaching_mass, (fam, sig), 50),
    }


def bench(f, args, number, repeat):
    f(*args)  # compile outside the timed region
    return min(timeit.repeat(lambda: f(*args), number=number, repeat=repeat)) / number


def end_to_end(preset):
    code = (
        "import time; from pipewft.harness.config import load_config; from pipewft.wft_engine import evolve;"
        f"sc, p = load_config({preset!r}).build(); evolve(sc, p); t = time.perf_counter(); evolve(sc, p);"
        "print(time.perf_counter() - t)"
    )
    out = {}
    for label, flag in (("numba", "0"), ("python", "1")):
        env = dict(os.environ, PIPEWFT_DISABLE_NUMBA=flag)
        res = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
        out[label] = float(res.stdout.strip())
    return out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--end-to-end", action="store_true")
    ap.add_argument("--preset", default="convergence")
    args = ap.parse_args(argv)

    print(f"backend: {_accel.backend()}")
    if _accel.backend() != "numba":
        print("numba is disabled or missing; both columns time the same Python code")
    rng = np.random.default_rng(args.seed)
    print(f"{'kernel':<24}{'compiled [us]':>15}{'python [us]':>15}{'speedup':>10}")
    for name, (f, fargs, number) in cases(rng).items():
        fast = bench(f, fargs, number, args.repeat)
        slow = bench(_accel.py_func(f), fargs, max(1, number // 10), args.repeat)
        print(f"{name:<24}{fast * 1e6:>15.2f}{slow * 1e6:>15.2f}{slow / fast:>10.1f}")
    fam, sig = cases(rng)["approaching_mass"][1]
    vec = bench(K.approaching_mass_numpy, (fam, sig), 50, args.repeat)
    print(f"{'approaching_mass_numpy':<24}{vec * 1e6:>15.2f}{'':>15}{'':>10}")

    if args.end_to_end:
        t = end_to_end(args.preset)
        print(f"preset {args.preset}: numba {t['numba']:.3f}s, python {t['python']:.3f}s, "
              f"speedup {t['python'] / t['numba']:.1f}")


if __name__ == "__main__":
    main()
