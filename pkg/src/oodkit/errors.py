"""Exception hierarchy shared across the toolkit.

Exit codes used by the CLI: config/usage errors exit 1, data errors exit 2,
numerical errors exit 3.
"""


class OodkitError(Exception):
    exit_code = 1


class ConfigError(OodkitError):
    """Bad configuration or usage: infeasible perplexity, out-of-bound
    component counts, unknown reducer names, and the like."""

    exit_code = 1


class DataError(OodkitError):
    """Malformed or inconsistent input data: broken NPY files, duplicate
    sample ids, shape mismatches, missing labels, degenerate metric input."""

    exit_code = 2


class NumericalError(OodkitError):
    exit_code = 3


class SingularCovarianceError(NumericalError):
    """Covariance matrix is not positive definite under epsilon policy 'none'.

    ``pivot`` is the 1-based failing Cholesky pivot when the factorization
    was actually attempted, or None when singularity was established from the
    rank argument (n - 1 < d) without forming the covariance.
    """

    def __init__(self, message, d=None, n=None, pivot=None):
        super().__init__(message)
        self.d = d
        self.n = n
        self.pivot = pivot
