"""Deterministic expectation dynamics for (S, L, H) systems.

Density matrices evolve under the trace dual of the generator with a
fixed-step classical RK4 integrator (default dt = 1e-3 in units where the
reference damping rate is 1).  The trace is renormalized every step with
the drift recorded; positivity is monitored at a configurable stride and
loss beyond -1e-6 raises instead of being silently repaired.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import FitUndefinedError, NotLinearError, SpaceMismatchError, \
    StepSizeError
from .hilbert import FOCK
from .network import SLHTriple
from .operators import (DensityMatrix, Operator, boundary_projector, embed,
                        fock_ops)

POSITIVITY_FLOOR = -1e-6
BOUND_SLACK = 1e-6


def _kernel_inputs(g: SLHTriple):
    d = g.space.dim
    h = np.ascontiguousarray(g.H.matrix)
    if g.n:
        ls = np.stack([op.matrix for op in g.L])
    else:
        ls = np.zeros((0, d, d), dtype=complex)
    ms = np.stack([m.conj().T @ m for m in ls]) if g.n else ls
    return h, ls, ms


def _norm_estimate(g: SLHTriple) -> float:
    """Coarse bound on the generator's action norm, for step-size warnings."""
    est = 2.0 * float(np.linalg.norm(g.H.matrix, 2))
    for op in g.L:
        est += 2.0 * float(np.linalg.norm(op.matrix, 2)) ** 2
    return est


def _steps_for(t_final: float, dt: float) -> int:
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    if t_final < 0:
        raise ValueError(f"t_final must be non-negative, got {t_final}")
    steps = int(round(t_final / dt))
    if abs(steps * dt - t_final) > 1e-9 * max(1.0, abs(t_final)):
        raise ValueError(f"t_final = {t_final} is not a multiple of dt = {dt}")
    return steps


def _check_stiffness(g: SLHTriple, dt: float):
    est = _norm_estimate(g)
    if est * dt > 0.1:
        warnings.warn(
            f"generator norm estimate {est:.3g} times dt {dt:g} exceeds 0.1; "
            "the fixed-step integrator may be inaccurate", stacklevel=3)


def _check_positivity(mat: np.ndarray, t: float):
    lo = float(np.linalg.eigvalsh((mat + mat.conj().T) / 2).min())
    if lo < POSITIVITY_FLOOR:
        raise StepSizeError(
            f"density lost positivity at t = {t:g} (min eigenvalue {lo:.3e}); "
            "reduce dt")


@dataclass(frozen=True)
class Trajectory:
    """Full density-matrix history on a uniform time grid."""

    times: np.ndarray
    states: np.ndarray
    system: SLHTriple
    trace_drift: float
    herm_residue: float

    @property
    def final(self) -> DensityMatrix:
        return DensityMatrix(self.system.space, self.states[-1])

    def density(self, index: int) -> DensityMatrix:
        return DensityMatrix(self.system.space, self.states[index])


def evolve(g: SLHTriple, rho0: DensityMatrix, t_final: float, dt: float = 1e-3,
           positivity_stride: int = 50) -> Trajectory:
    """Integrate d rho/dt = gen*(rho) and return the state trajectory."""
    if rho0.space != g.space:
        raise SpaceMismatchError(
            f"initial state on {rho0.space} but system on {g.space}")
    steps = _steps_for(t_final, dt)
    _check_stiffness(g, dt)
    h, ls, ms = _kernel_inputs(g)
    states, herm, drift = _kernels.rk4_states(h, ls, ms, rho0.matrix, dt, steps)
    times = np.arange(steps + 1) * dt
    for j in range(0, steps + 1, max(1, positivity_stride)):
        _check_positivity(states[j], times[j])
    if steps % max(1, positivity_stride):
        _check_positivity(states[-1], times[-1])
    return Trajectory(times, states, g, float(drift), float(herm))


@dataclass
class SimTrace:
    """Time series of a single expectation value <V(t)>."""

    times: np.ndarray
    values: np.ndarray
    imag_residue: float
    initial_state: str
    observable: str = ""
    bound: object | None = None       # anything with attributes c and lam
    bound_excess: float | None = None
    bound_violated: bool = False

    def attach_bound(self, bound) -> "SimTrace":
        """Attach an exponential decay bound and flag violations > 1e-6."""
        c, lam = float(bound.c), float(bound.lam)
        envelope = np.exp(-c * self.times) * self.values[0] + lam / c
        excess = float((self.values - envelope).max())
        self.bound = bound
        self.bound_excess = excess
        self.bound_violated = excess > BOUND_SLACK
        return self

    def to_csv(self, target) -> None:
        """Write `t,value` rows with %.12e formatting and LF endings."""
        def _dump(fh):
            fh.write("t,value\n")
            for t, v in zip(self.times, self.values):
                fh.write(f"{t:.12e},{v:.12e}\n")
        if hasattr(target, "write"):
            _dump(target)
        else:
            with open(target, "w", newline="\n") as fh:
                _dump(fh)


def expectation_trace(g: SLHTriple, v: Operator, rho0: DensityMatrix,
                      t_final: float, dt: float = 1e-3,
                      bound=None, positivity_stride: int = 50) -> SimTrace:
    """Trace of <V(t)> along the evolution, without storing all states."""
    if not v.is_hermitian():
        raise ValueError("traced observable must be Hermitian")
    if rho0.space != g.space:
        raise SpaceMismatchError(
            f"initial state on {rho0.space} but system on {g.space}")
    v = embed(v, g.space)
    steps = _steps_for(t_final, dt)
    _check_stiffness(g, dt)
    h, ls, ms = _kernel_inputs(g)
    obs = v.matrix[np.newaxis, :, :]

    stride = max(1, positivity_stride)
    values = np.empty(steps + 1, dtype=complex)
    rho = rho0.matrix
    done = 0
    values[0] = np.trace(v.matrix @ rho0.matrix)
    herm = 0.0
    drift = 0.0
    while done < steps:
        chunk = min(stride, steps - done)
        rho, tr, ch, cd = _kernels.rk4_run(h, ls, ms, rho, dt, chunk, obs)
        values[done + 1:done + chunk + 1] = tr[0, 1:]
        herm = max(herm, ch)
        drift = max(drift, cd)
        done += chunk
        _check_positivity(rho, done * dt)

    times = np.arange(steps + 1) * dt
    residue = float(np.abs(values.imag).max())
    trace = SimTrace(times, values.real.copy(), residue,
                     rho0.descriptor or "state", observable=str(v))
    if bound is not None:
        trace.attach_bound(bound)
    return trace


# ----------------------------------------------------------------------
# decay fitting
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class DecayFit:
    rate: float
    offset: float


def decay_fit(trace: SimTrace) -> DecayFit:
    """Fit <V(t)> ~ A exp(-c t) + offset.

    The offset comes from the three-point geometric estimate on equally
    spaced samples (exact for a pure exponential plus constant); the rate
    is the least-squares slope of log(<V> - offset) over the first half of
    the trace.
    """
    v = np.asarray(trace.values, dtype=float)
    t = np.asarray(trace.times, dtype=float)
    if v.size < 5:
        raise FitUndefinedError("trace too short to fit a decay")
    m = (v.size - 1) // 2
    v0, v1, v2 = v[0], v[m], v[2 * m]
    den = v0 + v2 - 2.0 * v1
    offset = (v0 * v2 - v1 * v1) / den if abs(den) > 1e-300 else 0.0
    half = slice(0, v.size // 2 + 1)
    y = v[half] - offset
    if y.min() <= 0:
        raise FitUndefinedError(
            "trace is not positive after offset subtraction; no decay to fit")
    slope, _ = np.polyfit(t[half], np.log(y), 1)
    return DecayFit(rate=float(-slope), offset=float(offset))


# ----------------------------------------------------------------------
# mean quadrature drift
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class DriftMatrix:
    """Affine generator of the mean quadratures: d<(q,p)>/dt = M <(q,p)> + b."""

    matrix: np.ndarray
    offset: np.ndarray
    eigenvalues: tuple

    def __post_init__(self):
        object.__setattr__(self, "matrix", np.asarray(self.matrix, dtype=float))
        object.__setattr__(self, "offset", np.asarray(self.offset, dtype=float))


def mean_drift_matrix(g: SLHTriple, residual_tol: float = 1e-8) -> DriftMatrix:
    """Extract the mean quadrature drift of a single-mode system.

    Requires gen(q) and gen(p) (boundary-projected) to lie in the affine
    span of {I, q, p}; coefficients come from a Hilbert-Schmidt
    least-squares projection onto that (Gram-orthogonalized) basis.
    """
    if len(g.space.factors) != 1 or g.space.factors[0].kind != FOCK:
        raise SpaceMismatchError(
            "mean drift extraction needs a system on a single fock factor, "
            f"got {g.space}")
    f = g.space.factors[0]
    ops = fock_ops(f.dim, f.label)
    q = ops["a"] + ops["adag"]
    p = -1j * (ops["a"] - ops["adag"])
    proj = boundary_projector(g.space).matrix

    basis = [proj @ np.eye(f.dim) @ proj, proj @ q.matrix @ proj,
             proj @ p.matrix @ proj]
    bmat = np.stack([b.reshape(-1) for b in basis], axis=1)

    from .generator import GeneratorHandle
    handle = GeneratorHandle(g)
    rows = []
    offs = []
    for x in (q, p):
        target = proj @ handle.apply(x).matrix @ proj
        coeff, *_ = np.linalg.lstsq(bmat, target.reshape(-1), rcond=None)
        resid = float(np.abs(target.reshape(-1) - bmat @ coeff).max())
        scale = 1.0 + float(np.abs(target).max())
        if resid / scale > residual_tol:
            raise NotLinearError(
                "mean quadrature dynamics do not close on span{I, q, p} "
                f"(relative residual {resid / scale:.3e})")
        if float(np.abs(coeff.imag).max()) > 1e-9:
            raise NotLinearError("drift coefficients are not real")
        offs.append(coeff[0].real)
        rows.append([coeff[1].real, coeff[2].real])

    mat = np.array(rows)
    eigs = np.linalg.eigvals(mat)
    order = np.lexsort((eigs.imag, eigs.real))
    eigs = tuple(complex(e) for e in eigs[order])
    return DriftMatrix(matrix=mat, offset=np.array(offs), eigenvalues=eigs)
