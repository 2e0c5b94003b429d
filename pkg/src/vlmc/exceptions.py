"""Exception types raised across the package."""


class VlmcError(Exception):
    """Base class for all package errors."""


class SuffixViolation(VlmcError, ValueError):
    """A candidate tree contains a leaf that is a proper suffix of another."""

    def __init__(self, s, w, message=None):
        self.s = s
        self.w = w
        super().__init__(message or f"{s!r} is a proper suffix of {w!r}")


class IncompleteTree(VlmcError, ValueError):
    """Some past of length h(T) resolves to no leaf."""

    def __init__(self, path, message=None):
        self.path = path
        super().__init__(message or f"no leaf is a suffix of past {path!r}")


class PastTooShort(VlmcError, ValueError):
    pass


class InvalidDistribution(VlmcError, ValueError):
    pass


class SampleTooShort(VlmcError, ValueError):
    pass


class DepthExceeded(VlmcError, ValueError):
    pass


class DomainError(VlmcError, ValueError):
    pass


class TooManyTrees(VlmcError, RuntimeError):
    pass


class HorizonTooLarge(VlmcError, ValueError):
    pass


class NoConvergence(VlmcError, RuntimeError):
    def __init__(self, residual, iterations):
        self.residual = residual
        self.iterations = iterations
        super().__init__(
            f"power iteration stopped after {iterations} iterations "
            f"with residual {residual:.3e}"
        )


class NotIrreducible(VlmcError, ValueError):
    pass


class ZeroProbabilityWord(VlmcError, ValueError):
    pass


class DepthTooSmall(VlmcError, ValueError):
    pass


class PreconditionViolated(VlmcError, ValueError):
    pass


class FormatError(VlmcError, ValueError):
    """Malformed model or sample file. Carries the location when known."""

    def __init__(self, message, path=None, line=None, position=None):
        self.path = path
        self.line = line
        self.position = position
        where = []
        if path is not None:
            where.append(str(path))
        if line is not None:
            where.append(f"line {line}")
        if position is not None:
            where.append(f"position {position}")
        prefix = ":".join(where)
        super().__init__(f"{prefix}: {message}" if prefix else message)
