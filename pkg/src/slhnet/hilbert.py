"""Finite-dimensional Hilbert spaces built from labeled tensor factors.

A space is an ordered tuple of factors, each a (label, dim, kind) triple.
Binary operator arithmetic merges spaces by factor label; the merged space
orders factors lexicographically by label so that results are deterministic
regardless of operand order.
"""

from __future__ import annotations

import math
from typing import Iterable, NamedTuple

from .errors import InvalidDimensionError, SpaceMismatchError

QUBIT = "qubit"
FOCK = "fock"
CUSTOM = "custom"


class Factor(NamedTuple):
    label: str
    dim: int
    kind: str


class HilbertSpace:
    """Composite space with uniquely labeled factors."""

    __slots__ = ("factors", "_dim")

    def __init__(self, factors: Iterable[Factor] = ()):
        factors = tuple(Factor(*f) for f in factors)
        labels = [f.label for f in factors]
        if len(set(labels)) != len(labels):
            raise SpaceMismatchError(f"duplicate factor labels in {labels}")
        for f in factors:
            if f.kind == QUBIT and f.dim != 2:
                raise InvalidDimensionError(f"qubit factor {f.label!r} must have dim 2")
            if f.kind == FOCK and f.dim < 2:
                raise InvalidDimensionError(
                    f"fock factor {f.label!r} needs dim >= 2, got {f.dim}")
            if f.dim < 1:
                raise InvalidDimensionError(f"factor {f.label!r} has dim {f.dim}")
        object.__setattr__(self, "factors", factors)
        object.__setattr__(self, "_dim", math.prod(f.dim for f in factors))

    def __setattr__(self, name, value):
        raise AttributeError("HilbertSpace is immutable")

    @property
    def dim(self) -> int:
        return self._dim

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(f.label for f in self.factors)

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(f.dim for f in self.factors)

    def factor(self, label: str) -> Factor:
        for f in self.factors:
            if f.label == label:
                return f
        raise SpaceMismatchError(f"no factor labeled {label!r} in {self}")

    def has_label(self, label: str) -> bool:
        return any(f.label == label for f in self.factors)

    def __eq__(self, other):
        return isinstance(other, HilbertSpace) and self.factors == other.factors

    def __hash__(self):
        return hash(self.factors)

    def __repr__(self):
        inner = ", ".join(f"{f.label}:{f.kind}({f.dim})" for f in self.factors)
        return f"HilbertSpace[{inner}]"


#: The scalar space: no factors, total dimension one.  Operators on it are
#: plain complex numbers and embed into any space as multiples of identity.
SCALAR_SPACE = HilbertSpace(())


def qubit_space(label: str = "q") -> HilbertSpace:
    return HilbertSpace([Factor(label, 2, QUBIT)])


def fock_space(label: str, dim: int) -> HilbertSpace:
    if dim < 2:
        raise InvalidDimensionError(f"fock space needs dim >= 2, got {dim}")
    return HilbertSpace([Factor(label, dim, FOCK)])


def compose_spaces(*spaces: HilbertSpace) -> HilbertSpace:
    """Union of factor sets, ordered lexicographically by label.

    Shared labels must agree in dimension and kind.
    """
    seen: dict[str, Factor] = {}
    for sp in spaces:
        for f in sp.factors:
            prev = seen.get(f.label)
            if prev is None:
                seen[f.label] = f
            elif prev != f:
                raise SpaceMismatchError(
                    f"factor {f.label!r} declared as {prev.kind}({prev.dim}) "
                    f"and {f.kind}({f.dim})")
    return HilbertSpace(tuple(seen[k] for k in sorted(seen)))
