"""Exception types raised by the estimation and simulation routines."""


class TwinKernelError(Exception):
    """Base class for all package errors."""


class OutOfDomain(TwinKernelError, ValueError):
    pass


class SingularMomentMatrix(TwinKernelError, ArithmeticError):
    """Local polynomial moment matrix is numerically singular."""


class EmptySample(TwinKernelError, ValueError):
    pass


class AtRiskZero(TwinKernelError, ValueError):
    """Nobody is at risk at the requested time."""


class GridTooCoarse(TwinKernelError, ValueError):
    pass


class InsufficientPoints(TwinKernelError, ValueError):
    pass
