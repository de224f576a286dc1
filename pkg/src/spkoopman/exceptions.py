"""Exception and warning types raised across the package."""


class SpKoopmanError(Exception):
    """Base class for package errors."""


class ConvergenceError(SpKoopmanError):
    """A dense LAPACK routine failed to converge.

    ``info`` carries the LAPACK return code: the number of superdiagonals
    (SVD) or eigenvalues (QR iteration) that did not converge.
    """

    def __init__(self, routine, info):
        self.routine = routine
        self.info = info
        super().__init__(f"{routine} did not converge (info={info})")


class DegenerateModeError(SpKoopmanError):
    """A retained eigenfunction vanishes at the initial state."""

    def __init__(self, mode_index, value):
        self.mode_index = mode_index
        self.value = value
        super().__init__(
            f"eigenfunction {mode_index} is degenerate at the initial state "
            f"(|phi(x0)| = {abs(value):.3e}); drop it before building "
            "a-posteriori features"
        )


class EmptySelectionError(SpKoopmanError):
    """Hard thresholding removed every mode."""


class ManifestError(SpKoopmanError):
    """A snapshot manifest is malformed; ``field`` names the offending key."""

    def __init__(self, field, message):
        self.field = field
        super().__init__(f"manifest field {field!r}: {message}")


class ConditioningWarning(RuntimeWarning):
    """A Gram/normal-equation matrix is numerically rank deficient."""


class RankTruncationWarning(RuntimeWarning):
    """The requested kernel rank exceeds the Gram numerical rank."""


class NotConvergedWarning(RuntimeWarning):
    """An iterative solver stopped at its iteration cap."""
