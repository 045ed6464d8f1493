"""Dense operators, states, and ordering primitives on labeled tensor spaces.

Conventions:

* Qubit basis: e0 is the sigma_z = +1 (excited) state, e1 the ground state,
  so sigma_z = diag(1, -1) and sigma_minus maps e0 -> e1.
* Fock factors are truncated at a user-chosen dimension d; the annihilator
  acts as a e_n = sqrt(n) e_{n-1} and the truncated commutator [a, adag]
  equals the identity except for -(d-1) at the top level.  Statements about
  oscillators are asserted after boundary projection (see
  :func:`boundary_projector`) or with states supported well below the top.
* Arithmetic between operators on different spaces first embeds both into
  the composed space (factors merged by label, ordered lexicographically).
* All values are immutable after construction; operations are pure.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from numbers import Number

import numpy as np

from .errors import (EmbeddingError, InvalidDimensionError, OrderingError,
                     SpaceMismatchError, StateError)
from .hilbert import (FOCK, QUBIT, SCALAR_SPACE, HilbertSpace, compose_spaces,
                      fock_space, qubit_space)

HERM_TOL = 1e-10
ORDER_TOL = 1e-9


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr = np.ascontiguousarray(arr, dtype=np.complex128)
    arr.flags.writeable = False
    return arr


class Operator:
    """A dense complex matrix tagged with its Hilbert-space signature."""

    __slots__ = ("space", "matrix")

    def __init__(self, space: HilbertSpace, matrix):
        matrix = np.asarray(matrix, dtype=np.complex128)
        if matrix.shape != (space.dim, space.dim):
            raise SpaceMismatchError(
                f"matrix shape {matrix.shape} does not match dim {space.dim} of {space}")
        object.__setattr__(self, "space", space)
        object.__setattr__(self, "matrix", _freeze(matrix.copy()))

    def __setattr__(self, name, value):
        raise AttributeError("Operator is immutable")

    # -- constructors -------------------------------------------------

    @classmethod
    def identity(cls, space: HilbertSpace) -> "Operator":
        return cls(space, np.eye(space.dim))

    @classmethod
    def zero(cls, space: HilbertSpace) -> "Operator":
        return cls(space, np.zeros((space.dim, space.dim)))

    @classmethod
    def scalar(cls, value: complex) -> "Operator":
        """A complex number as an operator on the scalar space."""
        return cls(SCALAR_SPACE, np.array([[value]]))

    # -- structure ----------------------------------------------------

    @property
    def dim(self) -> int:
        return self.space.dim

    def adjoint(self) -> "Operator":
        return Operator(self.space, self.matrix.conj().T)

    @property
    def dag(self) -> "Operator":
        return self.adjoint()

    def trace(self) -> complex:
        return complex(np.trace(self.matrix))

    def norm_max(self) -> float:
        """Largest entry magnitude; the workhorse for identity checks."""
        return float(np.abs(self.matrix).max()) if self.dim else 0.0

    def is_hermitian(self, tol: float = HERM_TOL) -> bool:
        return float(np.abs(self.matrix - self.matrix.conj().T).max()) <= tol

    def herm_part(self) -> "Operator":
        return Operator(self.space, (self.matrix + self.matrix.conj().T) / 2)

    def skew_part(self) -> "Operator":
        return Operator(self.space, (self.matrix - self.matrix.conj().T) / 2)

    def is_scalar(self) -> bool:
        return self.space is SCALAR_SPACE or not self.space.factors

    def scalar_value(self) -> complex:
        if not self.is_scalar():
            raise SpaceMismatchError("operator is not on the scalar space")
        return complex(self.matrix[0, 0])

    # -- arithmetic ---------------------------------------------------

    def _coerce(self, other) -> tuple["Operator", "Operator"]:
        if isinstance(other, Number):
            other = Operator(self.space, complex(other) * np.eye(self.dim))
        if not isinstance(other, Operator):
            return NotImplemented, NotImplemented
        if self.space == other.space:
            return self, other
        target = compose_spaces(self.space, other.space)
        return embed(self, target), embed(other, target)

    def __add__(self, other):
        a, b = self._coerce(other)
        if a is NotImplemented:
            return NotImplemented
        return Operator(a.space, a.matrix + b.matrix)

    __radd__ = __add__

    def __sub__(self, other):
        a, b = self._coerce(other)
        if a is NotImplemented:
            return NotImplemented
        return Operator(a.space, a.matrix - b.matrix)

    def __rsub__(self, other):
        a, b = self._coerce(other)
        if a is NotImplemented:
            return NotImplemented
        return Operator(a.space, b.matrix - a.matrix)

    def __mul__(self, other):
        if isinstance(other, Number):
            return Operator(self.space, self.matrix * complex(other))
        a, b = self._coerce(other)
        if a is NotImplemented:
            return NotImplemented
        return Operator(a.space, a.matrix @ b.matrix)

    def __rmul__(self, other):
        if isinstance(other, Number):
            return Operator(self.space, complex(other) * self.matrix)
        return NotImplemented

    def __neg__(self):
        return Operator(self.space, -self.matrix)

    def __pow__(self, exponent: int):
        if not isinstance(exponent, int) or exponent < 0:
            raise ValueError("operator powers must be non-negative integers")
        return Operator(self.space, np.linalg.matrix_power(self.matrix, exponent))

    def __repr__(self):
        return f"Operator(dim={self.dim}, space={self.space})"


def embed(op: Operator, target: HilbertSpace) -> Operator:
    """Kronecker-extend ``op`` with identities onto ``target``.

    Every factor of the operator's space must occur in the target (same
    dimension and kind); the result uses the target's declared factor order.
    """
    if op.space == target:
        return op
    if op.is_scalar():
        return Operator(target, op.matrix[0, 0] * np.eye(target.dim))
    src_labels = list(op.space.labels)
    for f in op.space.factors:
        if not target.has_label(f.label):
            raise EmbeddingError(f"target space has no factor {f.label!r}")
        if target.factor(f.label) != f:
            raise EmbeddingError(
                f"factor {f.label!r} differs between source and target space")
    rest = [f for f in target.factors if f.label not in src_labels]
    rest_dim = math.prod(f.dim for f in rest) if rest else 1
    big = np.kron(op.matrix, np.eye(rest_dim))
    # current factor order: source factors, then the remaining target factors
    current = list(op.space.factors) + rest
    if tuple(current) == target.factors:
        return Operator(target, big)
    dims = [f.dim for f in current]
    n = len(current)
    perm = [current.index(f) for f in target.factors]
    tensor = big.reshape(dims + dims)
    tensor = tensor.transpose(perm + [n + p for p in perm])
    return Operator(target, tensor.reshape(target.dim, target.dim))


def commutator(a: Operator, b: Operator) -> Operator:
    """[a, b] = ab - ba, on the composed space of the operands."""
    return a * b - b * a


def as_operator(value, space: HilbertSpace | None = None) -> Operator:
    """Lift numbers to scalar operators; pass operators through."""
    if isinstance(value, Operator):
        return value if space is None else embed(value, space)
    if isinstance(value, Number):
        if space is None:
            return Operator.scalar(complex(value))
        return Operator(space, complex(value) * np.eye(space.dim))
    raise TypeError(f"cannot interpret {type(value).__name__} as an operator")


# ----------------------------------------------------------------------
# factor operator families
# ----------------------------------------------------------------------

def qubit_ops(label: str = "q") -> dict[str, Operator]:
    """Identity, Pauli, and raising/lowering operators on a dim-2 factor."""
    sp = qubit_space(label)
    sx = np.array([[0, 1], [1, 0]], dtype=complex)
    sy = np.array([[0, -1j], [1j, 0]], dtype=complex)
    sz = np.array([[1, 0], [0, -1]], dtype=complex)
    return {
        "id": Operator.identity(sp),
        "sx": Operator(sp, sx),
        "sy": Operator(sp, sy),
        "sz": Operator(sp, sz),
        "sp": Operator(sp, (sx + 1j * sy) / 2),
        "sm": Operator(sp, (sx - 1j * sy) / 2),
    }


def fock_ops(dim: int, label: str = "f") -> dict[str, Operator]:
    """Identity, annihilator, creator, and number operator at truncation dim."""
    if dim < 2:
        raise InvalidDimensionError(f"fock truncation needs dim >= 2, got {dim}")
    sp = fock_space(label, dim)
    a = np.zeros((dim, dim), dtype=complex)
    for n in range(1, dim):
        a[n - 1, n] = math.sqrt(n)
    adag = a.conj().T
    return {
        "id": Operator.identity(sp),
        "a": Operator(sp, a),
        "adag": Operator(sp, adag),
        "n": Operator(sp, adag @ a),
    }


def boundary_projector(space: HilbertSpace, levels: int = 1) -> Operator:
    """Projector removing the top ``levels`` states of every fock factor.

    Truncation corrupts only the top of the number ladder; multiplying both
    sides of an oscillator identity by this projector confines comparisons
    to the faithful subspace.  Non-fock factors are left untouched.
    """
    mats = []
    for f in space.factors:
        d = np.ones(f.dim)
        if f.kind == FOCK:
            d[f.dim - levels:] = 0.0
        mats.append(np.diag(d))
    out = np.array([[1.0]])
    for m in mats:
        out = np.kron(out, m)
    return Operator(space, out)


def boundary_project(op: Operator, levels: int = 1) -> Operator:
    """P op P with P the boundary projector of the operator's space."""
    p = boundary_projector(op.space, levels)
    return p * op * p


# ----------------------------------------------------------------------
# states
# ----------------------------------------------------------------------

class StateVector:
    """Unit vector on a composite space."""

    __slots__ = ("space", "amplitudes", "descriptor")

    def __init__(self, space: HilbertSpace, amplitudes, descriptor: str = ""):
        vec = np.asarray(amplitudes, dtype=np.complex128).reshape(-1)
        if vec.shape != (space.dim,):
            raise StateError(f"state length {vec.size} != space dim {space.dim}")
        nrm = float(np.linalg.norm(vec))
        if abs(nrm - 1.0) > 1e-12:
            raise StateError(f"state vector norm {nrm!r} is not 1 within 1e-12")
        object.__setattr__(self, "space", space)
        object.__setattr__(self, "amplitudes", _freeze(vec.copy()))
        object.__setattr__(self, "descriptor", descriptor)

    def __setattr__(self, name, value):
        raise AttributeError("StateVector is immutable")

    def projector(self) -> Operator:
        return Operator(self.space, np.outer(self.amplitudes,
                                             self.amplitudes.conj()))

    def to_density(self) -> "DensityMatrix":
        return DensityMatrix(self.space,
                             np.outer(self.amplitudes, self.amplitudes.conj()),
                             descriptor=self.descriptor)

    def __repr__(self):
        tag = f" {self.descriptor}" if self.descriptor else ""
        return f"StateVector(dim={self.space.dim}{tag})"


class DensityMatrix:
    """Hermitian, unit-trace, PSD (within tolerance) matrix on a space."""

    __slots__ = ("space", "matrix", "descriptor")

    def __init__(self, space: HilbertSpace, matrix, descriptor: str = ""):
        mat = np.asarray(matrix, dtype=np.complex128)
        if mat.shape != (space.dim, space.dim):
            raise StateError(f"density shape {mat.shape} != dim {space.dim}")
        herm = float(np.abs(mat - mat.conj().T).max())
        if herm > 1e-10:
            raise StateError(f"density not Hermitian (residue {herm:.3e})")
        tr = complex(np.trace(mat))
        if abs(tr - 1.0) > 1e-12:
            raise StateError(f"density trace {tr!r} is not 1 within 1e-12")
        lo = float(np.linalg.eigvalsh((mat + mat.conj().T) / 2).min())
        if lo < -1e-10:
            raise StateError(f"density min eigenvalue {lo:.3e} < -1e-10")
        object.__setattr__(self, "space", space)
        object.__setattr__(self, "matrix", _freeze(mat.copy()))
        object.__setattr__(self, "descriptor", descriptor)

    def __setattr__(self, name, value):
        raise AttributeError("DensityMatrix is immutable")

    def __repr__(self):
        tag = f" {self.descriptor}" if self.descriptor else ""
        return f"DensityMatrix(dim={self.space.dim}{tag})"


def basis_state(space: HilbertSpace, index: int | dict[str, int],
                descriptor: str = "") -> StateVector:
    """Computational basis state, by flat index or per-factor indices."""
    if isinstance(index, dict):
        flat = 0
        for f in space.factors:
            k = index.get(f.label, 0)
            if not 0 <= k < f.dim:
                raise StateError(f"basis index {k} out of range for {f.label!r}")
            flat = flat * f.dim + k
        index = flat
    vec = np.zeros(space.dim)
    vec[index] = 1.0
    return StateVector(space, vec, descriptor or f"basis[{index}]")


def vacuum_state(space: HilbertSpace) -> StateVector:
    """Zero-energy product state: fock vacuum e0, qubit ground e1."""
    idx = {f.label: (1 if f.kind == QUBIT else 0) for f in space.factors}
    return basis_state(space, idx, "vacuum")


def coherent_state(alpha: complex, dim: int, label: str = "f") -> StateVector:
    """Truncated coherent state, renormalized after truncation.

    Heavy truncation (|alpha|^2 > dim / 4) is allowed but warned about;
    expectation values then carry visible truncation error.
    """
    if dim < 2:
        raise InvalidDimensionError(f"fock truncation needs dim >= 2, got {dim}")
    alpha = complex(alpha)
    if abs(alpha) ** 2 > dim / 4:
        warnings.warn(
            f"coherent amplitude |alpha|^2 = {abs(alpha)**2:.3g} exceeds dim/4 = "
            f"{dim / 4:.3g}; truncation error will be significant", stacklevel=2)
    amps = np.zeros(dim, dtype=complex)
    term = 1.0 + 0j
    for n in range(dim):
        amps[n] = term
        term = term * alpha / math.sqrt(n + 1)
    amps /= np.linalg.norm(amps)
    return StateVector(fock_space(label, dim), amps, f"coherent({alpha:g})")


# ----------------------------------------------------------------------
# ordering and expectations
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class OrderingResult:
    """Outcome of an operator-ordering test A <= B."""

    holds: bool
    margin: float
    witness: StateVector

    def __bool__(self):
        return self.holds


def order_leq(a: Operator | Number, b: Operator | Number,
              tol: float = ORDER_TOL) -> OrderingResult:
    """Check A <= B in the quadratic-form sense.

    The margin is the largest eigenvalue of A - B from a Hermitian
    eigendecomposition; the witness is the corresponding eigenvector.  The
    inequality holds iff the margin is at most ``tol``.
    """
    if isinstance(a, Number) and isinstance(b, Operator):
        a = as_operator(a, b.space)
    if isinstance(b, Number) and isinstance(a, Operator):
        b = as_operator(b, a.space)
    aa, bb = a._coerce(b)
    for name, op in (("left", aa), ("right", bb)):
        if not op.is_hermitian():
            raise OrderingError(f"{name} operand is not Hermitian within {HERM_TOL}")
    diff = aa.matrix - bb.matrix
    diff = (diff + diff.conj().T) / 2
    vals, vecs = np.linalg.eigh(diff)
    margin = float(vals[-1])
    witness = StateVector(aa.space, vecs[:, -1], "ordering witness")
    return OrderingResult(margin <= tol, margin, witness)


def is_psd(op: Operator, tol: float = ORDER_TOL) -> bool:
    return order_leq(Operator.zero(op.space), op, tol).holds


def expectation(state: StateVector | DensityMatrix, op: Operator) -> complex:
    """<psi, A psi> or tr(rho A); the operator may live on a sub-space."""
    if op.space != state.space:
        op = embed(op, state.space)
    if isinstance(state, StateVector):
        return complex(state.amplitudes.conj() @ (op.matrix @ state.amplitudes))
    if isinstance(state, DensityMatrix):
        return complex(np.trace(state.matrix @ op.matrix))
    raise TypeError(f"unsupported state type {type(state).__name__}")
