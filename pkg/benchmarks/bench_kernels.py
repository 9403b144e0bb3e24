"""Time the compiled kernels against the numpy reference.

Usage: ``python benchmarks/bench_kernels.py [--repeat N]``
"""
import argparse
import timeit

import numpy as np

from rlnn import _pykernels

try:
    from rlnn import _ckernels
except ImportError:
    _ckernels = None


def cases(rng):
    p, d = 64, 5
    w1, b1, w2 = rng.normal(size=(p, d)), rng.normal(size=p), rng.normal(size=p)
    x, y = rng.normal(size=(5000, d)), rng.normal(size=5000)
    xs = rng.normal(size=(50000, d))
    sd = np.abs(rng.normal(size=p)) * 0.1
    wide = rng.normal(size=(512, 3)), rng.normal(size=512), rng.normal(size=512)
    xw = rng.normal(size=(5000, 3))
    return {
        "mse_grad (5000 x 5, p=64)": lambda k: k.mse_grad(x, y, w1, b1, w2, 0.1),
        "mse_grad (5000 x 3, p=512)": lambda k: k.mse_grad(xw, y, *wide, 0.1),
        "forward (50000 x 5, p=64)": lambda k: k.forward(xs, w1, b1, w2, 0.1),
        "relu_expectation_sum (50000 x 5, p=64)": lambda k: k.relu_expectation_sum(xs, w1, b1, sd, w2),
        "normals (50000 paths x 10 dates x 5)": lambda k: k.normals(1, 0, 50000, 10, 5),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    rng = np.random.default_rng(0)
    backends = [("python", _pykernels)] + ([("cython", _ckernels)] if _ckernels else [])
    print(f"{'kernel':42s}" + "".join(f"{name:>12s}" for name, _ in backends) + "     speedup")
    for label, fn in cases(rng).items():
        times = []
        for _, mod in backends:
            fn(mod)  # warm up
            times.append(min(timeit.repeat(lambda: fn(mod), number=1, repeat=args.repeat)))
        cols = "".join(f"{1e3 * t:10.2f}ms" for t in times)
        speed = f"{times[0] / times[1]:10.1f}x" if len(times) > 1 else ""
        print(f"{label:42s}{cols}{speed}")
    if _ckernels is None:
        print("compiled kernels not built; only the numpy reference was timed")


if __name__ == "__main__":
    main()
