"""Exception types shared across the package.

The CLI maps these onto exit codes: validation problems exit with 2,
numerical failures with 3.
"""


class ValidationError(ValueError):
    """Invalid input: bad parameters, malformed files, contract violations."""


class GridMismatchError(ValidationError):
    """Observation times are not on the uniform grid an operation requires."""


class NumericalError(RuntimeError):
    """A linear-algebra or optimisation step failed beyond recovery."""


class IllConditionedError(NumericalError):
    """Covariance factorisation failed even after jitter retries.

    Carries an estimate of the smallest eigenvalue of the offending matrix
    so the caller can see how ill-conditioned the model was.
    """

    def __init__(self, message, min_eigenvalue=None):
        if min_eigenvalue is not None:
            message = f"{message} (smallest eigenvalue estimate: {min_eigenvalue:.3e})"
        super().__init__(message)
        self.min_eigenvalue = min_eigenvalue
