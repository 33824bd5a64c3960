"""Exception types raised by ordreg."""


class OrdRegError(Exception):
    """Base class for all ordreg errors."""


class DimensionMismatch(OrdRegError, ValueError):
    pass


class DegenerateMatrix(OrdRegError, ValueError):
    """All columns of a coefficient matrix are equal, so it has no canonical form."""


class IndexOutOfRange(OrdRegError, IndexError):
    pass


class ProblemTooLarge(OrdRegError, ValueError):
    pass


class AllRestartsDegenerate(OrdRegError, RuntimeError):
    pass


class GenerationFailed(OrdRegError, RuntimeError):
    pass


class ZeroNorm(OrdRegError, ValueError):
    pass


class ZeroVariance(OrdRegError, ValueError):
    pass


class NotApplicable(OrdRegError, ValueError):
    """A selection metric whose denominator is zero."""


class InsufficientData(OrdRegError, ValueError):
    pass


class NotAPermutation(OrdRegError, ValueError):
    pass


class ParseError(OrdRegError, ValueError):
    def __init__(self, path, line, col, message):
        self.path, self.line, self.col = path, line, col
        super().__init__(f"{path}:{line}:{col}: {message}")
