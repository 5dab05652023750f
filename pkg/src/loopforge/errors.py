"""Exception types raised by loopforge."""


class LoopForgeError(Exception):
    pass


class AliasingError(LoopForgeError, ValueError):
    """Grid too coarse for the requested analysis degree."""


class StructureError(LoopForgeError, ValueError):
    """Input is not in the required matrix class (skew-Hermitian, unitary, ...)."""


class BranchCutError(LoopForgeError, ValueError):
    """An eigenvalue phase is too close to pi for a stable principal logarithm."""


class InfeasiblePlanError(LoopForgeError, ValueError):
    """Degree budget too small for the splitting construction."""


class DegreeViolation(LoopForgeError, RuntimeError):
    """A produced loop exceeds its guaranteed degree."""
