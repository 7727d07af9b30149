"""Exceptions raised by deflation_lab.

Every class derives from :class:`DeflationLabError` and from the builtin
exception a caller would naturally catch for the same condition.
"""


class DeflationLabError(Exception):
    """Base class of all package errors."""


class NotSymmetricError(DeflationLabError, ValueError):
    def __init__(self, max_asymmetry, tol):
        self.max_asymmetry = max_asymmetry
        super().__init__(
            "matrix is not symmetric: max |a_ij - a_ji| = %.3e exceeds %.3e"
            % (max_asymmetry, tol)
        )


class ZeroPivotError(DeflationLabError, ZeroDivisionError):
    def __init__(self, row, what="LU"):
        self.row = row
        super().__init__("%s factorization hit a zero pivot in row %d" % (what, row))


class EmptyBasisError(DeflationLabError, ValueError):
    pass


class SingularSubdomainError(DeflationLabError, ArithmeticError):
    def __init__(self, subdomain, reason=""):
        self.subdomain = subdomain
        msg = "local matrix of subdomain %d is singular" % subdomain
        if reason:
            msg += " (%s)" % reason
        super().__init__(msg)


class HypothesisViolatedError(DeflationLabError, ValueError):
    pass


class DenseCapExceededError(DeflationLabError, ValueError):
    def __init__(self, n, cap):
        self.n = n
        self.cap = cap
        super().__init__(
            "operator of order %d exceeds the dense spectrum cap %d; "
            "use Ritz estimates from krylov.extract_ritz instead "
            "(or raise DEFLATION_LAB_DENSE_CAP)" % (n, cap)
        )


class DimensionMismatchError(DeflationLabError, ValueError):
    pass


class SingularMatrixError(DeflationLabError, ArithmeticError):
    pass


class TilingError(DeflationLabError, ValueError):
    def __init__(self, nparts, valid):
        self.nparts = nparts
        self.valid = valid
        options = ", ".join("%dx%d" % pq for pq in valid) or "none"
        super().__init__(
            "%d subdomains cannot tile the grid; valid factorizations: %s"
            % (nparts, options)
        )


class ConfigError(DeflationLabError, ValueError):
    pass


class NotOrthonormalError(DeflationLabError, ValueError):
    def __init__(self, defect, tol):
        self.defect = defect
        super().__init__(
            "basis is not orthonormal: max |Z^T Z - I| = %.3e exceeds %.1e" % (defect, tol)
        )
