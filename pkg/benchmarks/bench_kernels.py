"""Timing comparison of the compiled kernels against the numpy fallback.

Imports both backend modules directly, so the SCANFIT_PURE_PYTHON switch
plays no role here.  Run from the repository root:

    python3 benchmarks/bench_kernels.py
"""

import argparse
import time

import numpy as np

from scanfit._kernels import _fallback

try:
    from scanfit._kernels import _core
except ImportError:
    _core = None


def _pole_workload(n_freq, n_pairs, n_real, seed=0):
    rng = np.random.default_rng(seed)
    poles = []
    for _ in range(n_pairs):
        beta = 10.0 ** rng.uniform(0.5, 3.5)
        alpha = -0.02 * beta
        poles.extend([complex(alpha, beta), complex(alpha, -beta)])
    for _ in range(n_real):
        poles.append(complex(-(10.0 ** rng.uniform(0.0, 3.5)), 0.0))
    poles = np.asarray(poles, dtype=np.complex128)
    residues = rng.standard_normal(len(poles)) + 1j * rng.standard_normal(
        len(poles)
    )
    kinds = np.empty(len(poles), dtype=np.int8)
    kinds[: 2 * n_pairs : 2] = _fallback.KIND_PAIR_FIRST
    kinds[1 : 2 * n_pairs : 2] = _fallback.KIND_PAIR_SECOND
    kinds[2 * n_pairs :] = _fallback.KIND_REAL
    s = 1j * np.geomspace(1.0, 1e4, n_freq)
    return s, poles, residues, kinds


def _best_of(fn, repeats, inner):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        for _ in range(inner):
            fn()
        best = min(best, (time.perf_counter() - t0) / inner)
    return best


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeats", type=int, default=5,
                        help="timing repetitions per case (best is kept)")
    args = parser.parse_args(argv)

    s, poles, residues, kinds = _pole_workload(400, 12, 6)
    rng = np.random.default_rng(1)
    n = 8
    step = np.eye(n) + 1e-4 * rng.standard_normal((n, n))
    offset = 1e-4 * rng.standard_normal(n)
    x0 = np.zeros(n)

    cases = [
        ("rational_eval (400 pts, 30 poles)",
         lambda mod: mod.rational_eval(s, poles, residues, 0.1), 200),
        ("partial_fraction_basis (400x30)",
         lambda mod: mod.partial_fraction_basis(s, poles, kinds), 200),
        ("affine_propagate (400k steps)",
         lambda mod: mod.affine_propagate(step, offset, x0, 2000, 200), 3),
    ]

    backends = [("python", _fallback)]
    if _core is not None:
        backends.insert(0, ("compiled", _core))
    else:
        print("compiled extension not built; timing the fallback only\n")

    width = max(len(name) for name, _, _ in cases)
    header = f"{'kernel':<{width}}"
    for bname, _ in backends:
        header += f"  {bname:>12}"
    if _core is not None:
        header += f"  {'speedup':>8}"
    print(header)
    for name, call, inner in cases:
        times = {}
        for bname, mod in backends:
            times[bname] = _best_of(lambda: call(mod), args.repeats, inner)
        row = f"{name:<{width}}"
        for bname, _ in backends:
            row += f"  {times[bname] * 1e6:>10.1f}us"
        if _core is not None:
            row += f"  {times['python'] / times['compiled']:>7.1f}x"
        print(row)


if __name__ == "__main__":
    main()
