"""Compare the compiled kernels with the NumPy fallback.

    python benchmarks/bench_kernels.py [--n 64] [--d 3] [--repeat 5] [--threads 1]

Prints per-kernel median wall time for both backends, the speed-up, and the
max abs difference between their outputs.
"""
import argparse
import statistics
import time

import numpy as np

from perfhom import kernels
from perfhom.geometry import PerforationSpec, build_perforated_mask
from perfhom.grid import Operators


def _time(fn, repeat):
    fn()
    out = []
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        out.append(time.perf_counter() - t)
    return statistics.median(out)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, default=64)
    ap.add_argument("--d", type=int, default=3)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--threads", type=int, default=1)
    args = ap.parse_args()

    if not kernels.compiled_available():
        raise SystemExit("compiled extension not built; run `pip install -e . --no-build-isolation`")
    kernels.set_num_threads(args.threads)
    spec = PerforationSpec(d=args.d, eps=0.25, alpha=1)
    mask = build_perforated_mask(spec, args.n)
    ops = Operators(mask.grid, mask.fluid_cell, mask.fluid_face)
    rng = np.random.default_rng(0)
    u = rng.standard_normal((args.d,) + mask.grid.shape) * mask.fluid_face
    p = rng.standard_normal(mask.grid.shape) * mask.fluid_cell

    cases = {
        "laplacian": lambda: ops.laplacian(u),
        "divergence": lambda: ops.divergence(u),
        "gradient": lambda: ops.gradient(p),
        "convection": lambda: ops.convection(u, u),
        "dot": lambda: kernels.dot(u, u),
    }
    print(f"grid {args.n}^{args.d}, threads {args.threads}, repeat {args.repeat}")
    print(f"{'kernel':<12}{'cython [ms]':>14}{'numpy [ms]':>14}{'speed-up':>10}{'max diff':>12}")
    for name, fn in cases.items():
        kernels.use_backend("cython")
        tc = _time(fn, args.repeat)
        rc = np.asarray(fn())
        kernels.use_backend("python")
        tp = _time(fn, args.repeat)
        rp = np.asarray(fn())
        diff = float(np.abs(rc - rp).max())
        print(f"{name:<12}{tc * 1e3:>14.3f}{tp * 1e3:>14.3f}{tp / tc:>10.1f}{diff:>12.2e}")
    kernels.use_backend("cython")


if __name__ == "__main__":
    main()
