"""Compare the numba and pure-numpy kernel backends.

    python benchmarks/bench_kernels.py [--sizes 32 64 128] [--repeat 5]

Each kernel runs once per backend to warm up (numba compiles on the first
call, or loads from its on-disk cache), then the best of ``--repeat`` runs is
reported. Timings are wall clock in milliseconds.
"""

import argparse
import time

import numpy as np

from bolax import kernels
from bolax._backend import HAVE_NUMBA, set_backend
from bolax.finitegap import potential_from_roots
from bolax.laxop import LaxMatrix, block_operator


def _best(fn, repeat):
    fn()
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best * 1e3


def cases(K):
    u = potential_from_roots([0.3, 0.2], 24)
    A = LaxMatrix(u, K).matrix - (2.5 + 0.3j) * np.eye(K)
    b = np.zeros(K, dtype=np.complex128)
    b[0] = 1
    lu, piv, _ = kernels.lu_factor(A)
    B = block_operator(u, 3.5 + 0.2j, K)
    return {
        "lu_factor": lambda: kernels.lu_factor(A),
        "lu_solve": lambda: kernels.lu_solve(lu, piv, b),
        "qr_eigvals": lambda: kernels.qr_eigvals(LaxMatrix(u, K).matrix),
        "power_norm": lambda: kernels.power_norm(B),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[32, 64, 128])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    backends = ["numba", "numpy"] if HAVE_NUMBA else ["numpy"]
    print(f"{'kernel':<12}{'K':>6}" + "".join(f"{b:>12}" for b in backends) + f"{'ratio':>10}")
    for K in args.sizes:
        for name in cases(K):
            row = {}
            for b in backends:
                prev = set_backend(b)
                try:
                    row[b] = _best(cases(K)[name], args.repeat)
                finally:
                    set_backend(prev)
            ratio = row["numpy"] / row["numba"] if "numba" in row else float("nan")
            print(f"{name:<12}{K:>6}" + "".join(f"{row[b]:>12.3f}" for b in backends)
                  + f"{ratio:>10.1f}")


if __name__ == "__main__":
    main()
