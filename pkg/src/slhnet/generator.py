"""Lindblad generator calculus for (S, L, H) systems.

The generator of a system G = (S, L, H) acting on an observable X is

    gen(X) = -i[X, H] + diss_L(X),
    diss_L(X) = (1/2) L* [X, L] + (1/2) [L*, X] L   (summed over channels).

S never enters the generator directly; it only shapes the coupling vectors
of composed systems.  The trace dual acts on density matrices:

    gen*(rho) = -i[H, rho] + sum_k (L_k rho L_k* - (1/2){L_k* L_k, rho}).

Generators are evaluated lazily per observable; the only cached state is
the per-channel L_k* L_k products, so handles stay cheap and immutable.
"""

from __future__ import annotations

import numpy as np

from .errors import SpaceMismatchError
from .network import SLHTriple, concatenate, series
from .operators import Operator, commutator, embed


class GeneratorHandle:
    """Reusable generator for one system; caches L_k* L_k."""

    __slots__ = ("system", "_l_mats", "_ldl_mats", "_h_mat")

    def __init__(self, system: SLHTriple):
        object.__setattr__(self, "system", system)
        l_mats = tuple(op.matrix for op in system.L)
        object.__setattr__(self, "_l_mats", l_mats)
        object.__setattr__(self, "_ldl_mats",
                           tuple(m.conj().T @ m for m in l_mats))
        object.__setattr__(self, "_h_mat", system.H.matrix)

    def __setattr__(self, name, value):
        raise AttributeError("GeneratorHandle is immutable")

    def _lift(self, x: Operator) -> np.ndarray:
        if x.space != self.system.space:
            x = embed(x, self.system.space)
        return x.matrix

    def dissipator(self, x: Operator) -> Operator:
        xm = self._lift(x)
        out = np.zeros_like(xm)
        for lm in self._l_mats:
            xl = xm @ lm - lm @ xm
            out += 0.5 * (lm.conj().T @ xl) + 0.5 * (lm.conj().T @ xm
                                                     - xm @ lm.conj().T) @ lm
        return Operator(self.system.space, out)

    def apply(self, x: Operator) -> Operator:
        xm = self._lift(x)
        hm = self._h_mat
        out = -1j * (xm @ hm - hm @ xm)
        for lm in self._l_mats:
            xl = xm @ lm - lm @ xm
            out += 0.5 * (lm.conj().T @ xl) + 0.5 * (lm.conj().T @ xm
                                                     - xm @ lm.conj().T) @ lm
        return Operator(self.system.space, out)

    def apply_adjoint(self, rho: np.ndarray) -> np.ndarray:
        """Trace dual on a raw density matrix (returns d rho / dt)."""
        hm = self._h_mat
        out = -1j * (hm @ rho - rho @ hm)
        for lm, mm in zip(self._l_mats, self._ldl_mats):
            out += lm @ rho @ lm.conj().T - 0.5 * (mm @ rho + rho @ mm)
        return out


def dissipator(L, x: Operator) -> Operator:
    """diss_L(x) for a coupling vector L (operator or sequence of them)."""
    from .hilbert import compose_spaces
    from .operators import as_operator

    if isinstance(L, Operator) or not hasattr(L, "__iter__"):
        L = (L,)
    L = [as_operator(lk) for lk in L]
    space = compose_spaces(x.space, *(lk.space for lk in L))
    x = embed(x, space)
    out = Operator.zero(space)
    for lk in L:
        lk = embed(lk, space)
        out = out + 0.5 * lk.adjoint() * commutator(x, lk) \
            + 0.5 * commutator(lk.adjoint(), x) * lk
    return out


def generator(g: SLHTriple, x: Operator) -> Operator:
    """gen_G(x) = -i[x, H] + diss_L(x), on the composed space of g and x."""
    from .hilbert import compose_spaces

    space = compose_spaces(g.space, x.space)
    if space != g.space:
        g = g.on_space(space)
    return GeneratorHandle(g).apply(x)


def adjoint_generator(g: SLHTriple, rho) -> np.ndarray:
    """d rho / dt for a density matrix (raw ndarray or DensityMatrix)."""
    mat = getattr(rho, "matrix", rho)
    space = getattr(rho, "space", None)
    if space is not None and space != g.space:
        raise SpaceMismatchError(
            f"density on {space} does not match system space {g.space}")
    mat = np.asarray(mat, dtype=complex)
    if mat.shape != (g.space.dim, g.space.dim):
        raise SpaceMismatchError(
            f"density shape {mat.shape} does not match system dim {g.space.dim}")
    return GeneratorHandle(g).apply_adjoint(mat)


def _series_expansions(g2: SLHTriple, g1: SLHTriple, x: Operator):
    """The three expanded forms of the series generator, evaluated at x."""
    from .hilbert import compose_spaces

    space = compose_spaces(g2.space, g1.space)
    a = g2.on_space(space)   # downstream
    b = g1.on_space(space)   # upstream
    xm = embed(x, space).matrix
    d = space.dim
    n = a.n
    s2 = [[a.S[i][j].matrix for j in range(n)] for i in range(n)]
    l2 = [op.matrix for op in a.L]
    l1 = [op.matrix for op in b.L]
    h12 = a.H.matrix + b.H.matrix
    zero = np.zeros((d, d), dtype=complex)

    def comm(p, q):
        return p @ q - q @ p

    def diss(ls):
        out = zero.copy()
        for lk in ls:
            out += 0.5 * lk.conj().T @ comm(xm, lk) \
                + 0.5 * comm(lk.conj().T, xm) @ lk
        return out

    if n == 0:
        base = -1j * comm(xm, h12)
        return base, base.copy(), base.copy()

    sl1 = [sum((s2[j][k] @ l1[k] for k in range(n)), start=zero)
           for j in range(n)]

    # form 1: single composed coupling and corrected Hamiltonian
    cross = sum((l2[j].conj().T @ sl1[j] for j in range(n)), start=zero)
    h_corr = (cross - cross.conj().T) / 2j
    form1 = diss([l2[j] + sl1[j] for j in range(n)]) \
        - 1j * comm(xm, h12 + h_corr)

    # interference terms shared by forms 2 and 3
    inter = sum((sl1[j].conj().T @ comm(xm, l2[j])
                 + comm(l2[j].conj().T, xm) @ sl1[j] for j in range(n)),
                start=zero)

    # form 2: scattered upstream coupling as its own dissipator
    form2 = diss(sl1) + diss(l2) + inter - 1j * comm(xm, h12)

    # form 3: bare dissipators plus the scattering sandwich
    sandwich = zero.copy()
    for j in range(n):
        for k in range(n):
            m = sum((s2[r][j].conj().T @ xm @ s2[r][k] for r in range(n)),
                    start=zero)
            if j == k:
                m = m - xm
            sandwich += l1[j].conj().T @ m @ l1[k]
    form3 = diss(l1) + diss(l2) + sandwich + inter - 1j * comm(xm, h12)
    return form1, form2, form3


def verify_series_generator(g1: SLHTriple, g2: SLHTriple, x: Operator,
                            tol: float = 1e-9) -> float:
    """Largest deviation between gen(g2 <| g1)(x) and its expanded forms.

    Also checks concatenation additivity gen(g1 boxplus g2) = gen(g1) +
    gen(g2) at x.  Returns the worst max-abs entry difference found.
    """
    direct = generator(series(g2, g1), x).matrix
    worst = 0.0
    for form in _series_expansions(g2, g1, x):
        worst = max(worst, float(np.abs(direct - form).max()))

    cat = generator(concatenate(g1, g2), x)
    split = generator(g1, x) + generator(g2, x)
    worst = max(worst, (cat - split).norm_max())
    if worst > tol:
        raise AssertionError(
            f"series/concatenation generator identities deviate by {worst:.3e}")
    return worst
