"""Compiled vs pure-Python direct convolution kernels.

Usage: python3 bench/bench_kernels.py [--grids 64,128,256,512,1024] [--repeats 5]

Prints median milliseconds per call for each backend and the speed-up, and
checks that both backends agree to 1e-10.
"""
import argparse
import time

import numpy as np

from artifact import _kernels_py

try:
    from artifact import _kernels as _compiled
except ImportError:
    _compiled = None


def _median_ms(fn, repeats):
    fn()
    ts = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        ts.append(time.perf_counter() - t0)
    return 1e3 * float(np.median(ts))


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--grids", default="64,128,256,512,1024")
    ap.add_argument("--cubic-grids", default="16,32,64,128")
    ap.add_argument("--repeats", type=int, default=5)
    args = ap.parse_args(argv)
    if _compiled is None:
        print("compiled extension not built; only the fallback is available")
    rng = np.random.default_rng(0)

    def rnd(n):
        return rng.standard_normal(n) + 1j * rng.standard_normal(n)

    print(f"{'kernel':<12}{'N':>6}{'python ms':>12}{'compiled ms':>13}{'speed-up':>10}")
    for label, grids, fn_name, arity in (("quadratic", args.grids, "circular_convolve", 2),
                                         ("cubic", args.cubic_grids, "circular_convolve3", 3)):
        for n in (int(x) for x in grids.split(",")):
            xs = [rnd(n) for _ in range(arity)]
            py = getattr(_kernels_py, fn_name)
            tp = _median_ms(lambda: py(*xs), args.repeats)
            if _compiled is not None:
                cc = getattr(_compiled, fn_name)
                diff = float(np.max(np.abs(py(*xs) - cc(*xs))))
                if diff > 1e-10 * max(1.0, float(np.max(np.abs(py(*xs))))):
                    raise SystemExit(f"backends disagree at N={n}: {diff:.3e}")
                tc = _median_ms(lambda: cc(*xs), args.repeats)
                print(f"{label:<12}{n:>6}{tp:>12.3f}{tc:>13.3f}{tp / tc:>10.1f}")
            else:
                print(f"{label:<12}{n:>6}{tp:>12.3f}{'-':>13}{'-':>10}")


if __name__ == "__main__":
    main()
