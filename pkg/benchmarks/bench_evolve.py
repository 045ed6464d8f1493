"""Compare the compiled and pure-numpy master-equation kernels.

Runs the damped-cavity stepping workload at several truncation dimensions
and channel counts and reports steps/second for each backend.  The
compiled kernel wins where Python call overhead dominates (small dense
matrices); BLAS-backed numpy catches up as the dimension grows.

Usage: python benchmarks/bench_evolve.py [--steps N]
"""

import argparse
import math
import time

import numpy as np

from slhnet import _kernels_py
from slhnet import fock_ops, SLHTriple, basis_state
from slhnet.dynamics import _kernel_inputs

try:
    from slhnet import _core
    BACKENDS = [("python", _kernels_py), ("cython", _core)]
except ImportError:
    _core = None
    BACKENDS = [("python", _kernels_py)]


def workload(dim, channels):
    f = fock_ops(dim, "m")
    ls = [f["a"], f["n"] * (1.0 / dim), (f["a"] + f["adag"]) * 0.3][:channels]
    g = SLHTriple(None, ls, 0.2 * f["n"])
    rho = basis_state(g.space, 1).to_density().matrix
    h, l_stack, m_stack = _kernel_inputs(g)
    obs = f["n"].matrix[np.newaxis, :, :]
    return h, l_stack, m_stack, rho, obs


def bench(impl, h, ls, ms, rho, obs, steps, dt):
    t0 = time.perf_counter()
    impl.rk4_run(h, ls, ms, rho, dt, steps, obs)
    return time.perf_counter() - t0


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--steps", type=int, default=2000)
    parser.add_argument("--repeats", type=int, default=3)
    args = parser.parse_args()

    dt = 1e-3
    print(f"{'dim':>4} {'ch':>3} " + " ".join(f"{name:>12}" for name, _ in
                                              BACKENDS) + "   speedup",
          flush=True)
    for dim in (2, 4, 8, 16, 24, 32, 48, 64):
        # keep the flop budget roughly constant across dimensions
        steps = max(20, min(args.steps, int(args.steps * (16 / dim) ** 3)))
        for channels in (1, 3):
            h, ls, ms, rho, obs = workload(dim, channels)
            times = []
            for _, impl in BACKENDS:
                # warm up once, then take the best of the repeats
                bench(impl, h, ls, ms, rho, obs, min(steps, 20), dt)
                best = min(bench(impl, h, ls, ms, rho, obs, steps, dt)
                           for _ in range(args.repeats))
                times.append(best)
            rate = " ".join(f"{steps / t:>10.0f}/s" for t in times)
            speedup = times[0] / times[-1] if len(times) > 1 else math.nan
            print(f"{dim:>4} {channels:>3} {rate}   {speedup:5.2f}x",
                  flush=True)


if __name__ == "__main__":
    main()
