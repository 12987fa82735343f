"""
Exception hierarchy for crystalflow
Every error carries the process exit code the CLI reports for it
"""

from typing import Any, Optional


def _rebuild(cls, args, state):
    error = Exception.__new__(cls)
    error.args = args
    error.__dict__.update(state)
    return error


class CrystalflowError(Exception):
    """Base class for all crystalflow failures"""

    exit_code = 1

    def __init__(self, message: str, **context: Any):
        super().__init__(message)
        self.context = context

    def __reduce__(self):
        # subclass constructors take extra arguments, so rebuild from state
        return _rebuild, (self.__class__, self.args, self.__dict__)

    def with_context(self, **context: Any) -> "CrystalflowError":
        """Attach run context (N, energy, curve...) while the error propagates"""
        self.context.update(context)
        details = ", ".join(f"{key}={value}" for key, value in context.items())
        self.args = (f"{self.args[0]} [{details}]",) + tuple(self.args[1:])
        return self


class ConfigurationError(CrystalflowError):
    """Invalid run configuration or operation precondition"""


class InvalidEnergyError(CrystalflowError):
    """Energy is non-finite or fails the f > 0, f + f'' > 0 admissibility check"""


class DegenerateInitializationError(CrystalflowError):
    """Initial polygon has a side of zero length"""


class InvalidComparisonError(CrystalflowError):
    """Origin is not interior to a body being measured or compared"""


class OutOfDomainError(CrystalflowError):
    """Closed-form solution evaluated past its extinction time"""


class NumericalFailure(CrystalflowError):
    """Failure of a flow integration"""

    exit_code = 2


class NonConvexFrankDiagramError(NumericalFailure):
    """A discrete energy factor g_i came out non-positive"""


class SideVanishedError(NumericalFailure):
    """A polygon side fell below the vanish tolerance before the requested end time"""

    def __init__(self, message: str, index: int, time: float, last_state: Any = None):
        super().__init__(message, index=index, time=time)
        self.index = index
        self.time = time
        self.last_state = last_state


class StepUnderflowError(NumericalFailure):
    """Adaptive step size collapsed (blow-up near extinction)"""

    def __init__(self, message: str, time: float, last_state: Any = None):
        super().__init__(message, time=time)
        self.time = time
        self.last_state = last_state


class ConvexityLostError(NumericalFailure):
    """Support field stopped being convex (u + u'' <= 0 somewhere)"""

    def __init__(self, message: str, index: int, time: Optional[float] = None):
        super().__init__(message, index=index, time=time)
        self.index = index
        self.time = time


class ReportWriteError(CrystalflowError):
    """Report or CSV could not be written"""

    exit_code = 3

    def __init__(self, message: str, path: Any):
        super().__init__(f"{message}: {path}", path=str(path))
        self.path = path
