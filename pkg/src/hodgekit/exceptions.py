"""Exception and warning types shared across hodgekit."""


class HodgeKitError(Exception):
    """Base class for all hodgekit errors."""


class ShapeError(HodgeKitError, ValueError):
    """Operands have incompatible shapes, degrees or parameter counts."""


class ValidationError(HodgeKitError, ValueError):
    """Input data violates a structural invariant."""


class ConvergenceError(HodgeKitError, RuntimeError):
    """An iterative procedure failed to converge."""


class GuardError(HodgeKitError, ValueError):
    """A norm guard (``||A|| < 1``, ``sigma_max < 1``) is violated."""


class AliasingWarning(UserWarning):
    """A pseudo-spectral product was truncated to the padded band."""


class RadiusWarning(UserWarning):
    """A series was evaluated outside its declared convergence radius."""
