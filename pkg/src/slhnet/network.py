"""The (S, L, H) triple and its network algebra.

An open system is parameterized by a scattering matrix S (n x n, operator
entries, unitary in the block sense), a coupling vector L (length n), and a
Hamiltonian H.  Systems combine by

* concatenation  ``g1 boxplus g2``: block-diagonal S, stacked L, summed H;
* series product ``g2 <| g1`` (g1 feeds g2):
  (S2 S1, L2 + S2 L1, H1 + H2 + Im{L2* S2 L1});
* feedback reduction ``lft``: close a loop between the second block of
  channels, well-posed when I - S22 is invertible;
* direct coupling: an interaction Hamiltonian -i(K* v - v* K).

Scalar entries stand for scalar multiples of the identity on the composite
space, which makes commutation with every system variable structural.
Binary products first merge the operand spaces by factor label and embed all
entries, so networks can be assembled without manual tensor bookkeeping.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import (ChannelMismatchError, CouplingError, IllPosedLoopError,
                     TripleInvariantError)
from .hilbert import HilbertSpace, compose_spaces
from .operators import Operator, as_operator, embed

UNITARITY_TOL = 1e-9
HAMILTONIAN_TOL = 1e-10
WELL_POSED_TOL = 1e-8


def im_op(x: Operator) -> Operator:
    """Operator imaginary part (x - x*)/2i; exactly Hermitian."""
    return Operator(x.space, (x.matrix - x.matrix.conj().T) * (-0.5j))


def _entry_spaces(entries):
    for e in entries:
        if isinstance(e, Operator):
            yield e.space


class SLHTriple:
    """An open system G = (S, L, H) on a composite Hilbert space."""

    __slots__ = ("space", "S", "L", "H", "n")

    def __init__(self, S, L, H, *, validate: bool = True):
        if S is None and L is None:
            n = 0
        elif S is None:
            n = len(L)
        else:
            n = len(S)
        S = [] if S is None else [list(row) for row in S]
        L = [] if L is None else list(L)
        if S == [] and n:
            S = [[1 if i == j else 0 for j in range(n)] for i in range(n)]
        if L == [] and n:
            L = [0] * n
        if len(L) != n or any(len(row) != n for row in S):
            raise ChannelMismatchError(
                f"S must be {n}x{n} and L length {n} for an {n}-channel system")
        if H is None:
            H = 0

        flat = [e for row in S for e in row] + list(L) + [H]
        space = compose_spaces(*_entry_spaces(flat))
        S_ops = tuple(tuple(as_operator(e, space) for e in row) for row in S)
        L_ops = tuple(as_operator(e, space) for e in L)
        H_op = as_operator(H, space)

        object.__setattr__(self, "space", space)
        object.__setattr__(self, "S", S_ops)
        object.__setattr__(self, "L", L_ops)
        object.__setattr__(self, "H", H_op)
        object.__setattr__(self, "n", n)
        if validate:
            self._validate()

    def __setattr__(self, name, value):
        raise AttributeError("SLHTriple is immutable")

    def _validate(self):
        if not self.H.is_hermitian(HAMILTONIAN_TOL):
            raise TripleInvariantError(
                "Hamiltonian is not Hermitian within "
                f"{HAMILTONIAN_TOL} (residue "
                f"{(self.H - self.H.adjoint()).norm_max():.3e})")
        if self.n == 0:
            return
        s = self.s_dense()
        eye = np.eye(s.shape[0])
        err = max(np.abs(s.conj().T @ s - eye).max(),
                  np.abs(s @ s.conj().T - eye).max())
        if err > UNITARITY_TOL:
            raise TripleInvariantError(
                f"scattering matrix not unitary within {UNITARITY_TOL} "
                f"(residue {err:.3e})")

    # -- dense block views ---------------------------------------------

    def s_dense(self) -> np.ndarray:
        if self.n == 0:
            return np.zeros((0, 0), dtype=complex)
        return np.block([[op.matrix for op in row] for row in self.S])

    def l_dense(self) -> np.ndarray:
        d = self.space.dim
        if self.n == 0:
            return np.zeros((0, d), dtype=complex)
        return np.vstack([op.matrix for op in self.L])

    def on_space(self, space: HilbertSpace) -> "SLHTriple":
        """Re-embed every entry onto a larger composite space."""
        if space == self.space:
            return self
        S = [[embed(e, space) for e in row] for row in self.S]
        L = [embed(e, space) for e in self.L]
        return SLHTriple(S if self.n else None, L if self.n else None,
                         embed(self.H, space), validate=False)

    @classmethod
    def identity(cls, n: int = 1) -> "SLHTriple":
        return cls([[1 if i == j else 0 for j in range(n)] for i in range(n)],
                   [0] * n, 0)

    def __repr__(self):
        return f"SLHTriple(n={self.n}, space={self.space})"


def _align(g1: SLHTriple, g2: SLHTriple):
    space = compose_spaces(g1.space, g2.space)
    return g1.on_space(space), g2.on_space(space), space


def _rows(mat: np.ndarray, n: int, space: HilbertSpace):
    """Slice an (n*d) x (n*d) dense matrix back into operator blocks."""
    d = space.dim
    return tuple(tuple(Operator(space, mat[i * d:(i + 1) * d, j * d:(j + 1) * d])
                       for j in range(n)) for i in range(n))


def _col(vec: np.ndarray, n: int, space: HilbertSpace):
    d = space.dim
    return tuple(Operator(space, vec[i * d:(i + 1) * d, :]) for i in range(n))


# ----------------------------------------------------------------------
# products
# ----------------------------------------------------------------------

def concatenate(g1: SLHTriple, g2: SLHTriple) -> SLHTriple:
    """g1 boxplus g2: assemble side by side without signal connections."""
    a, b, space = _align(g1, g2)
    n1, n2 = a.n, b.n
    zero = Operator.zero(space)
    S = [[a.S[i][j] if j < n1 else zero for j in range(n1 + n2)] if i < n1
         else [zero if j < n1 else b.S[i - n1][j - n1] for j in range(n1 + n2)]
         for i in range(n1 + n2)]
    L = list(a.L) + list(b.L)
    return SLHTriple(S if n1 + n2 else None, L if n1 + n2 else None, a.H + b.H)


def series(g2: SLHTriple, g1: SLHTriple) -> SLHTriple:
    """Series product g2 <| g1; the signal flows g1 -> g2."""
    if g1.n != g2.n:
        raise ChannelMismatchError(
            f"series product needs equal channel counts, got {g2.n} and {g1.n}")
    a, b, space = _align(g2, g1)  # a = downstream, b = upstream
    n = a.n
    if n == 0:
        return SLHTriple(None, None, a.H + b.H)
    s2, s1 = a.s_dense(), b.s_dense()
    l2, l1 = a.l_dense(), b.l_dense()
    s = s2 @ s1
    lv = l2 + s2 @ l1
    cross = Operator(space, l2.conj().T @ (s2 @ l1))
    return SLHTriple(_rows(s, n, space), _col(lv, n, space),
                     b.H + a.H + im_op(cross))


def inverse(g: SLHTriple) -> SLHTriple:
    """The series inverse (S*, -S* L, -H)."""
    if g.n == 0:
        return SLHTriple(None, None, -g.H)
    sd = g.s_dense().conj().T
    lv = -(sd @ g.l_dense())
    return SLHTriple(_rows(sd, g.n, g.space), _col(lv, g.n, g.space), -g.H)


def conjugate_through(g1: SLHTriple, g2: SLHTriple,
                      tol: float = UNITARITY_TOL) -> SLHTriple:
    """The system g2~ with g2 <| g1 == g1 <| g2~.

    Computed as g1^-1 <| g2 <| g1 and cross-checked against the closed form
    (S1* S2 S1, S1*(S2 - I)L1 + S1* L2, H2 + Im{L2*(S2 + I)L1 - L1* S2 L1}).
    """
    if g1.n != g2.n:
        raise ChannelMismatchError(
            f"conjugation needs equal channel counts, got {g1.n} and {g2.n}")
    composed = series(inverse(g1), series(g2, g1))
    a, b, space = _align(g2, g1)
    n = a.n
    if n == 0:
        return composed
    s1, s2 = b.s_dense(), a.s_dense()
    l1, l2 = b.l_dense(), a.l_dense()
    eye = np.eye(s1.shape[0])
    s = s1.conj().T @ s2 @ s1
    lv = s1.conj().T @ ((s2 - eye) @ l1) + s1.conj().T @ l2
    cross = Operator(space, l2.conj().T @ ((s2 + eye) @ l1)
                     - l1.conj().T @ (s2 @ l1))
    closed = SLHTriple(_rows(s, n, space), _col(lv, n, space),
                       a.H + im_op(cross))
    err = max(
        np.abs(composed.s_dense() - closed.s_dense()).max(initial=0.0),
        np.abs(composed.l_dense() - closed.l_dense()).max(initial=0.0),
        (composed.H - closed.H).norm_max(),
    )
    if err > tol:
        raise TripleInvariantError(
            f"conjugation closed form deviates from composition by {err:.3e}")
    return composed


@dataclass(frozen=True)
class ChannelPartition:
    """Split of n channels into a kept block n1 and a fed-back block n2."""

    n1: int
    n2: int

    def __post_init__(self):
        if self.n1 < 0 or self.n2 < 0:
            raise ChannelMismatchError("partition blocks must be non-negative")


def lft(g: SLHTriple, partition: ChannelPartition | tuple[int, int]) -> SLHTriple:
    """Feedback reduction F(g): feed outputs of block 2 back into its inputs.

    Well-posed when I - S22 is invertible (minimum singular value above
    1e-8).  A singular loop is tolerated only when it is completely
    decoupled (S12, S21 and L2 all vanish); the loop block then carries no
    signal and is dropped.
    """
    if not isinstance(partition, ChannelPartition):
        partition = ChannelPartition(*partition)
    n1, n2 = partition.n1, partition.n2
    if n1 + n2 != g.n:
        raise ChannelMismatchError(
            f"partition {n1}+{n2} does not cover {g.n} channels")
    if n2 == 0:
        return g
    d = g.space.dim
    s = g.s_dense()
    lv = g.l_dense()
    k = n1 * d
    s11, s12 = s[:k, :k], s[:k, k:]
    s21, s22 = s[k:, :k], s[k:, k:]
    l1, l2 = lv[:k, :], lv[k:, :]
    loop = np.eye(n2 * d) - s22
    smin = float(np.linalg.svd(loop, compute_uv=False)[-1]) if n2 * d else 0.0
    if smin <= WELL_POSED_TOL:
        coupled = max(np.abs(s12).max(initial=0.0), np.abs(s21).max(initial=0.0),
                      np.abs(l2).max(initial=0.0))
        if coupled <= 1e-12:
            # loop block is an isolated passive ring; dropping it is exact
            return SLHTriple(_rows(s11, n1, g.space) if n1 else None,
                             _col(l1, n1, g.space) if n1 else None, g.H)
        raise IllPosedLoopError(
            f"I - S22 is numerically singular (min singular value {smin:.3e}) "
            "for the fed-back block")
    w = np.linalg.solve(loop, np.eye(n2 * d))
    s_out = s11 + s12 @ w @ s21
    l_out = l1 + s12 @ (w @ l2)
    h_out = (g.H + im_op(Operator(g.space, l1.conj().T @ (s12 @ (w @ l2))))
             + im_op(Operator(g.space, l2.conj().T @ (s22 @ (w @ l2)))))
    return SLHTriple(_rows(s_out, n1, g.space) if n1 else None,
                     _col(l_out, n1, g.space) if n1 else None, h_out)


# ----------------------------------------------------------------------
# static systems and couplings
# ----------------------------------------------------------------------

def static_system(t) -> SLHTriple:
    """A purely static system (T, 0, 0) from a unitary numeric matrix."""
    t = np.atleast_2d(np.asarray(t, dtype=complex))
    n = t.shape[0]
    if t.shape != (n, n):
        raise ChannelMismatchError(f"static scattering must be square, got {t.shape}")
    eye = np.eye(n)
    err = max(np.abs(t.conj().T @ t - eye).max(), np.abs(t @ t.conj().T - eye).max())
    if err > 1e-10:
        raise TripleInvariantError(
            f"static scattering not unitary within 1e-10 (residue {err:.3e})")
    return SLHTriple([[t[i, j] for j in range(n)] for i in range(n)], [0] * n, 0)


def permutation_system(perm: Sequence[int]) -> SLHTriple:
    """Static system routing input perm[i] to output i."""
    n = len(perm)
    if sorted(perm) != list(range(n)):
        raise ChannelMismatchError(f"{perm!r} is not a permutation of 0..{n - 1}")
    mat = np.zeros((n, n))
    for i, p in enumerate(perm):
        mat[i, p] = 1.0
    return static_system(mat)


JUNCTION = [[0, 1], [1, 0]]  # the two-channel swap


@dataclass(frozen=True)
class DirectCoupling:
    """Bidirectional energy exchange specified by plant K and exosystem v."""

    K: tuple
    v: tuple

    def __post_init__(self):
        if len(self.K) != len(self.v):
            raise CouplingError(
                f"coupling vectors differ in length: {len(self.K)} vs {len(self.v)}")
        object.__setattr__(self, "K", tuple(as_operator(k) for k in self.K))
        object.__setattr__(self, "v", tuple(as_operator(x) for x in self.v))

    def hamiltonian(self) -> Operator:
        return direct_coupling(self.K, self.v)


def direct_coupling(K, v) -> Operator:
    """Interaction Hamiltonian -i(K* v - v* K), summed over components."""
    K = [as_operator(k) for k in K]
    v = [as_operator(x) for x in v]
    if len(K) != len(v):
        raise CouplingError(
            f"coupling vectors differ in length: {len(K)} vs {len(v)}")
    if not K:
        return Operator.scalar(0.0)
    total = None
    for kj, vj in zip(K, v):
        term = -1j * (kj.adjoint() * vj - vj.adjoint() * kj)
        total = term if total is None else total + term
    if not total.is_hermitian(HAMILTONIAN_TOL):
        raise CouplingError(
            "direct coupling produced a non-Hermitian Hamiltonian (residue "
            f"{(total - total.adjoint()).norm_max():.3e})")
    return total


# ----------------------------------------------------------------------
# plant-exosystem wedges
# ----------------------------------------------------------------------

def wedge_series(p: SLHTriple, w: SLHTriple,
                 coupling: DirectCoupling | None = None) -> SLHTriple:
    """Series interconnection p <| w, plus an optional direct coupling."""
    net = series(p, w)
    if coupling is None:
        return net
    h_pw = coupling.hamiltonian()
    return SLHTriple(net.S if net.n else None, net.L if net.n else None,
                     net.H + h_pw)


def wedge_lft(p: SLHTriple, w: SLHTriple,
              coupling: DirectCoupling | None = None) -> SLHTriple:
    """Looped plant-exosystem network for two-channel p and w.

    The exosystem's second output feeds the plant's first input and the
    plant's first output returns to the exosystem's second input; the first
    exosystem channel and the second plant channel stay external.  Built as
    F((I boxplus J) <| (w boxplus I) <| (I boxplus p) <| (I boxplus J)) with
    the loop closed over the last channel, then joined with the direct
    interaction Hamiltonian.
    """
    if p.n != 2 or w.n != 2:
        raise ChannelMismatchError(
            f"looped wedge is defined for 2-channel systems, got {p.n} and {w.n}")
    ident = SLHTriple.identity(1)
    swap = permutation_system((1, 0))
    chain = series(concatenate(ident, swap), concatenate(w, ident))
    chain = series(chain, concatenate(ident, p))
    chain = series(chain, concatenate(ident, swap))
    net = lft(chain, ChannelPartition(2, 1))
    if coupling is None:
        return net
    h_pw = coupling.hamiltonian()
    return SLHTriple(net.S if net.n else None, net.L if net.n else None,
                     net.H + h_pw)
