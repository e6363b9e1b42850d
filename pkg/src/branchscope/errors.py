"""Exception hierarchy for branchscope."""


class BranchscopeError(Exception):
    """Base class for all errors raised by this package."""


class ModelRejected(BranchscopeError, ValueError):
    """A lifetime/offspring model violates one of the standing assumptions.

    ``condition`` names the violated assumption, e.g. ``"supercriticality"``.
    """

    def __init__(self, condition, detail=""):
        self.condition = condition
        msg = condition if not detail else f"{condition}: {detail}"
        super().__init__(msg)


class QuadratureFailure(BranchscopeError, ArithmeticError):
    pass


class SolverFailure(BranchscopeError, ArithmeticError):
    pass


class DegenerateTail(BranchscopeError, ValueError):
    pass


class EmptySample(BranchscopeError, ValueError):
    pass


class UnsupportedTestFunction(BranchscopeError, ValueError):
    pass


class GridBelowWindow(BranchscopeError, ValueError):
    pass


class NoAtoms(BranchscopeError, ValueError):
    pass


class TooFewSurvivors(BranchscopeError, RuntimeError):
    pass


class ZeroZ(BranchscopeError, ZeroDivisionError):
    pass


class MissingCensus(BranchscopeError, KeyError):
    pass


class CapExceeded(BranchscopeError, RuntimeError):
    pass


class ConfigError(BranchscopeError):
    pass


class ParseError(ConfigError):
    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        super().__init__(message)


class ValidationError(ConfigError, ValueError):
    def __init__(self, key, message):
        self.key = key
        super().__init__(f"{key}: {message}")
