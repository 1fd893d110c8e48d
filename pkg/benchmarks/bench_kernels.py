"""Timing comparison of the compiled and pure-NumPy kernel backends.

Run from a checkout after installing the package:

    python benchmarks/bench_kernels.py [--repeat 5]

Each kernel is timed at a realistic size (codebook search at the
production 4096x512 point, loss grids at a few seconds of audio) and the
best of --repeat runs is reported per backend.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from foalab import _kernels_py

try:
    from foalab import _kernels as compiled
except ImportError:
    compiled = None


def best_time(fn, repeat: int) -> float:
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3, help="runs per measurement (best kept)")
    ap.add_argument("--batch", type=int, default=512, help="latent batch size")
    ap.add_argument("--codes", type=int, default=4096, help="codebook entries")
    ap.add_argument("--dim", type=int, default=512, help="latent dimension")
    ap.add_argument("--frames", type=int, default=400, help="loss grid frames")
    ap.add_argument("--bins", type=int, default=513, help="loss grid bins")
    args = ap.parse_args()

    rng = np.random.default_rng(0)
    latents = rng.standard_normal((args.batch, args.dim))
    entries = rng.standard_normal((args.codes, args.dim))
    i_in = rng.standard_normal((args.frames, args.bins, 3))
    i_rec = rng.standard_normal((args.frames, args.bins, 3))
    w = rng.random((args.frames, args.bins))
    scale = 1.0 / (args.frames * args.bins)

    cases = [
        (
            f"nearest_codes {args.batch}x{args.dim} vs {args.codes} entries",
            lambda impl: impl.nearest_codes(latents, entries),
        ),
        (
            f"alignment_grid {args.frames}x{args.bins}",
            lambda impl: impl.alignment_grid(i_in, i_rec, 1e-8),
        ),
        (
            f"intensity_gradient {args.frames}x{args.bins}",
            lambda impl: impl.intensity_gradient(i_in, i_rec, w, 1e-8, scale),
        ),
    ]

    if compiled is None:
        print("compiled backend not importable; timing the NumPy backend only")
    for label, call in cases:
        t_py = best_time(lambda: call(_kernels_py), args.repeat)
        line = f"{label:48s} python {t_py * 1e3:9.2f} ms"
        if compiled is not None:
            t_cy = best_time(lambda: call(compiled), args.repeat)
            line += f"   compiled {t_cy * 1e3:9.2f} ms   speedup {t_py / t_cy:6.2f}x"
        print(line)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
