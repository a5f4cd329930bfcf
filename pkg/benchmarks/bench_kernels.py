"""Compare the numba kernels with their numpy fallbacks.

Kernel timings run in-process (both variants are importable side by side).
The end-to-end timing advances a batch of 20 randomized trajectories on a
rough modulation, once per backend in a fresh interpreter, because the
backend is fixed at import time by MODNLS_DISABLE_NUMBA.

    python benchmarks/bench_kernels.py
"""

import argparse
import json
import os
import subprocess
import sys
import timeit

import numpy as np

END_TO_END = """
import json, timeit
import numpy as np
import modnls
from modnls.integrators import RandomSequence, SchemeSpec, derive_seed, run_batch
from modnls.modulation import make_rough_path
from modnls.spectral import initial_datum, make_grid
grid = make_grid(1, 128)
c0 = np.broadcast_to(initial_datum(grid).coefficients, (20, 256))
g = make_rough_path(0.25)
xi = np.stack([RandomSequence(derive_seed(1, k)).draws({N}) for k in range(20)])
spec = SchemeSpec("randomized_exponential")
run = lambda: run_batch(c0, grid, g, spec, 1.0, {N}, xi)
run()
best = min(timeit.repeat(run, number=1, repeat={repeat}))
print(json.dumps({{"backend": modnls.BACKEND, "seconds": best}}))
"""


def best_of(fn, repeat, number):
    fn()
    return min(timeit.repeat(fn, number=number, repeat=repeat)) / number


def kernel_table(repeat):
    from modnls import _kernels as K
    if K.BACKEND != "numba":
        print("numba backend inactive; kernel comparison skipped")
        return
    rng = np.random.default_rng(0)
    ksq = np.fft.fftfreq(256, 1 / 256) ** 2
    c = rng.standard_normal((20, 256)) + 1j * rng.standard_normal((20, 256))
    theta = rng.uniform(-1, 1, 20)
    s = rng.uniform(0, 1, 1000)
    a, b = rng.standard_normal(2 ** 13 + 1), rng.standard_normal(2 ** 13 + 1)
    v = rng.standard_normal(2000)
    cases = [
        ("phase multiply 20x256", lambda: K.phase_multiply_numpy(c, ksq, theta),
         lambda: K.phase_multiply(c, ksq, theta), 200),
        ("nonlinear phase 20x256", lambda: K.nonlinear_phase_numpy(c, 0.01),
         lambda: K.nonlinear_phase(c, 0.01), 200),
        ("cubic 20x256", lambda: K.cubic_numpy(c), lambda: K.cubic(c), 200),
        ("trig eval 1000 pts x 8193 modes", lambda: K.trig_eval_numpy(s, a, b),
         lambda: K.trig_eval(s, a, b), 1),
        ("gagliardo 2000 pts", lambda: K.gagliardo_sum_numpy(v, 1e-3, 0.25),
         lambda: K.gagliardo_sum(v, 1e-3, 0.25), 1),
    ]
    print(f"{'kernel':34s} {'numpy':>12s} {'numba':>12s} {'speedup':>8s}")
    for name, f_np, f_nb, number in cases:
        t_np = best_of(f_np, repeat, number)
        t_nb = best_of(f_nb, repeat, number)
        print(f"{name:34s} {t_np * 1e6:10.1f}us {t_nb * 1e6:10.1f}us {t_np / t_nb:7.1f}x")


def end_to_end(steps, repeat):
    code = END_TO_END.format(N=steps, repeat=repeat)
    results = {}
    for disabled in ("0", "1"):
        env = dict(os.environ, MODNLS_DISABLE_NUMBA=disabled)
        out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True,
                             text=True, check=True)
        rec = json.loads(out.stdout.strip().splitlines()[-1])
        results[rec["backend"]] = rec["seconds"]
    print(f"\nrandomized scheme, 20 sequences x {steps} steps, K = 128")
    for backend, sec in results.items():
        print(f"  {backend:6s} {sec:8.3f}s  ({sec / steps * 1e6:7.1f}us per batched step)")
    if len(results) == 2:
        print(f"  speedup {results['numpy'] / results['numba']:.1f}x")


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--steps", type=int, default=1024)
    p.add_argument("--repeat", type=int, default=5)
    args = p.parse_args()
    kernel_table(args.repeat)
    end_to_end(args.steps, args.repeat)


if __name__ == "__main__":
    main()
