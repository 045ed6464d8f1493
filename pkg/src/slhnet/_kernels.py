"""Backend selection for the master-equation stepping kernels.

The compiled extension is optional; when it fails to import (no compiler
at install time) the pure-numpy implementation takes over with identical
semantics.  When both are present, calls dispatch on matrix dimension:
the fused compiled loop wins while Python call overhead dominates (small
matrices), BLAS-backed numpy wins once the cubic work does (see
benchmarks/bench_evolve.py for the measured crossover).
"""

from . import _kernels_py

try:
    from . import _core
except ImportError:  # pragma: no cover - depends on build environment
    _core = None

#: Largest dimension routed to the compiled kernels (measured crossover).
CROSSOVER_DIM = 12

BACKEND = "cython+python" if _core is not None else "python"


def _impl(dim: int):
    if _core is not None and dim <= CROSSOVER_DIM:
        return _core
    return _kernels_py


def lindblad_rhs(h, ls, ms, rho):
    return _impl(rho.shape[0]).lindblad_rhs(h, ls, ms, rho)


def rk4_run(h, ls, ms, rho, dt, steps, obs):
    return _impl(rho.shape[0]).rk4_run(h, ls, ms, rho, dt, steps, obs)


def rk4_states(h, ls, ms, rho, dt, steps):
    return _impl(rho.shape[0]).rk4_states(h, ls, ms, rho, dt, steps)
