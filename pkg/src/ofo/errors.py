"""Exception taxonomy shared across the package.

The CLI maps these onto its exit codes: InputError -> 2, DivergenceError -> 4.
A failed certification is a value, not an exception.
"""


class OfoError(Exception):
    """Base class for all package errors."""


class InputError(OfoError):
    """Invalid user input: bad dimensions, malformed scenario, bad parameters."""


class ConvexityGapError(InputError):
    """The cost's strong convexity does not exceed its coupling modulus, so the
    dominance parameters are undefined (the loop is simply not certifiable)."""


class SingularMatrixError(OfoError):
    """A matrix that must be inverted is singular ('singular plant matrix')."""


class NotStabilizedError(OfoError):
    """The plant matrix is not Hurwitz ('plant not pre-stabilized')."""


class DivergenceError(OfoError):
    """A simulated state stopped being finite."""

    def __init__(self, message: str, time: float | None = None, segment: int | None = None):
        super().__init__(message)
        self.time = time
        self.segment = segment
