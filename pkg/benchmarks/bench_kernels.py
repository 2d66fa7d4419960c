"""Compare the compiled kernels with the numpy fallback.

Usage::

    python benchmarks/bench_kernels.py [--m 5000] [--points 5000] [--repeat 3]

Both backends agree to rounding; the script checks that before timing.
"""
import argparse
import timeit

import numpy as np

from lmsampling import _backend, samplaw
from lmsampling.procgen import frac_ma_coeffs


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--m", type=int, default=5000, help="MA truncation order")
    ap.add_argument("--points", type=int, default=5000, help="sampled indices per call")
    ap.add_argument("--gamma", type=float, default=1.9, help="Pareto tail exponent of the walk")
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    if _backend._ext is None:
        raise SystemExit("compiled kernels are not built; run `pip install -e .` first")
    psi = frac_ma_coeffs(0.35, args.m).coeffs
    idx = samplaw.walk(samplaw.ParetoTail(args.gamma), args.points - 1, 1).times
    dense = np.arange(args.points, dtype=np.int64)

    cases = {
        "noise_field": lambda b: _backend.noise_field(7, dense, backend=b),
        "ma_at_indices (walk)": lambda b: _backend.ma_at_indices(psi, idx, 7, backend=b),
        "ma_at_indices (dense)": lambda b: _backend.ma_at_indices(psi, dense, 7, backend=b),
    }
    print(f"m = {args.m}, points = {args.points}, best of {args.repeat}")
    print(f"{'kernel':<24}{'compiled [s]':>14}{'python [s]':>14}{'speedup':>10}")
    for name, fn in cases.items():
        if not np.allclose(fn("compiled"), fn("python"), rtol=1e-13, atol=1e-13):
            raise SystemExit(f"{name}: backends disagree")
        t = {b: min(timeit.repeat(lambda: fn(b), number=1, repeat=args.repeat)) for b in ("compiled", "python")}
        print(f"{name:<24}{t['compiled']:>14.4f}{t['python']:>14.4f}{t['python'] / t['compiled']:>9.1f}x")


if __name__ == "__main__":
    main()
