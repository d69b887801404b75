"""Exception hierarchy. Exit codes match the CLI contract:
0 success, 2 config error, 3 solver failure, 4 guard violation."""


class ProjfreeError(Exception):
    exit_code = 1


class ConfigError(ProjfreeError):
    exit_code = 2


class SolverError(ProjfreeError):
    exit_code = 3


class GuardViolation(ProjfreeError):
    exit_code = 4


class DimensionMismatch(SolverError):
    pass


class NonFiniteValue(SolverError):
    pass


class PowerIterationError(SolverError):
    """Power iteration failed to converge; carries the last Rayleigh residual."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class SubsolverError(SolverError):
    """Frank-Wolfe subsolver ran out of iterations; carries the last gap."""

    def __init__(self, message, last_gap=None, iters=None):
        super().__init__(message)
        self.last_gap = last_gap
        self.iters = iters
