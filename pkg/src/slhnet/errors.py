"""Exception types shared across the library."""


class SlhnetError(Exception):
    """Base class for all library errors."""


class SpaceMismatchError(SlhnetError):
    """Operands live on Hilbert spaces that cannot be reconciled."""


class EmbeddingError(SlhnetError):
    """An operator references a tensor factor absent from the target space."""


class InvalidDimensionError(SlhnetError, ValueError):
    """A Hilbert-space factor has an unusable dimension."""


class OrderingError(SlhnetError):
    """Operator ordering requested for a non-Hermitian operand."""


class StateError(SlhnetError):
    """A state vector or density matrix violates its invariants."""


class ChannelMismatchError(SlhnetError):
    """Two systems with incompatible channel counts were combined."""


class TripleInvariantError(SlhnetError):
    """An (S, L, H) triple violates unitarity of S or Hermiticity of H."""


class IllPosedLoopError(SlhnetError):
    """A feedback reduction with singular loop operator I - S22."""


class CouplingError(SlhnetError):
    """A direct-coupling specification produced a non-Hermitian Hamiltonian."""


class NotQuadraticError(SlhnetError):
    """Coefficient extraction applied to a map that is not quadratic."""


class NotLinearError(SlhnetError):
    """Mean quadrature dynamics do not close on the affine span of q, p."""


class FitUndefinedError(SlhnetError):
    """Decay fitting attempted on data without a positive decaying part."""


class StepSizeError(SlhnetError):
    """Integration lost positivity; the step size is too coarse."""
