"""Exception hierarchy shared by every module of the package."""


class LabError(Exception):
    """Base class for all errors raised by edgelab."""


class ChainStructureError(LabError, ValueError):
    """A chain description is malformed (shapes, row sums, value bounds)."""

    def __init__(self, message, step=None, row=None):
        self.step = step
        self.row = row
        where = ""
        if step is not None:
            where = f" (step {step}" + (f", row {row})" if row is not None else ")")
        super().__init__(message + where)


class EllipticityViolation(LabError):
    pass


class DegenerateMarginal(LabError):
    pass


class LagOutOfRange(LabError, IndexError):
    pass


class StepOutOfRange(LabError, IndexError):
    pass


class ImpossiblePin(LabError):
    pass


class SupportOverflow(LabError):
    pass


class NodeBudgetExceeded(LabError):
    pass


class LogOfVanishingJet(LabError, ZeroDivisionError):
    pass


class DegenerateVariance(LabError):
    pass


class ResonantDegenerate(LabError):
    """The base value at a resonant point is too small to anchor a log-jet."""


class OrderMismatch(LabError, ValueError):
    pass


class TailBudgetExceeded(LabError):
    def __init__(self, message, tail_max=None, budget=None):
        self.tail_max = tail_max
        self.budget = budget
        super().__init__(message)


class DeltaTooLarge(LabError, ValueError):
    pass


class NoContraction(LabError):
    def __init__(self, message, residual=None):
        self.residual = residual
        super().__init__(message)


class ParameterOutOfRange(LabError, ValueError):
    pass
