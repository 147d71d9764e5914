class StrataError(Exception):
    """Base class for errors raised by this package."""


class GridMismatch(StrataError, ValueError):
    pass


class ConstraintViolation(StrataError, ValueError):
    """A solvability or admissibility constraint does not hold."""


class NumericalFailure(StrataError, RuntimeError):
    pass


class CFLViolation(NumericalFailure):
    def __init__(self, dt: float, suggested: float):
        self.dt = dt
        self.suggested = suggested
        super().__init__(f"dt={dt:.3e} exceeds the stability bound; try dt <= {suggested:.3e}")


class BlowUp(NumericalFailure):
    pass


class ConfigError(StrataError, ValueError):
    pass
