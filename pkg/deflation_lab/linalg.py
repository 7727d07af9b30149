"""Dense and sparse linear algebra kernels.

Dense matrices are plain 2-D ``numpy.ndarray`` of floats, sparse matrices are
``scipy.sparse.csr_matrix`` with canonical (sorted, duplicate free) indices.
Everything here is a pure function of its inputs.

The symmetric eigensolver has two paths:

* ``method="lapack"`` (default) goes through ``scipy.linalg.eigh``;
* ``method="ql"`` runs the Householder tridiagonalization followed by the
  implicitly shifted QL iteration implemented below. It is quadratic in Python
  operations per sweep and is meant for small matrices and cross-checks.
"""

import logging
import math
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse
import scipy.sparse.linalg

from deflation_lab.errors import (
    DimensionMismatchError,
    EmptyBasisError,
    NotSymmetricError,
    ZeroPivotError,
)
from deflation_lab.utils import warnings as dl_warnings

logger = logging.getLogger(__name__)

SYMMETRY_TOL = 1e-12
RANK_DROP_TOL = 1e-10


def as_dense(A, name="A"):
    """Return ``A`` as a finite 2-D float array (sparse input is densified)."""
    if scipy.sparse.issparse(A):
        A = A.toarray()
    A = np.asarray(A, dtype=float)
    if A.ndim == 1:
        A = A.reshape(-1, 1)
    if A.ndim != 2:
        raise DimensionMismatchError("%s must be two dimensional" % name)
    if not np.all(np.isfinite(A)):
        raise ValueError("%s has non-finite entries" % name)
    return A


def as_csr(A, name="A"):
    """Return ``A`` as a canonical CSR matrix with finite values."""
    A = scipy.sparse.csr_matrix(A, dtype=float)
    A.sum_duplicates()
    A.sort_indices()
    if not np.all(np.isfinite(A.data)):
        raise ValueError("%s has non-finite entries" % name)
    return A


def _require_square(A, name="A"):
    if A.shape[0] != A.shape[1]:
        raise DimensionMismatchError(
            "%s must be square, got %d x %d" % (name, A.shape[0], A.shape[1])
        )


def max_asymmetry(A):
    A = as_dense(A)
    _require_square(A)
    return float(np.max(np.abs(A - A.T))) if A.size else 0.0


def check_symmetric(A, tol=SYMMETRY_TOL):
    """Raise :class:`NotSymmetricError` unless ``A`` is symmetric to ``tol``
    relative to its largest entry. Returns the measured asymmetry."""
    A = as_dense(A)
    _require_square(A)
    asym = max_asymmetry(A)
    scale = float(np.max(np.abs(A))) if A.size else 0.0
    if asym > tol * max(scale, np.finfo(float).tiny):
        raise NotSymmetricError(asym, tol * scale)
    return asym


# ---------------------------------------------------------------------------
# symmetric eigensolver


@dataclass(frozen=True)
class SymEigDecomposition:
    """Eigenvalues in ascending order and the matching orthonormal eigenvectors
    stored column-wise."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self):
        V = self.eigenvectors
        return (V * self.eigenvalues) @ V.T

    def split(self, r):
        """(Λ, V) of the ``r`` smallest pairs and (Λ_⊥, V_⊥) of the rest."""
        lam, V = self.eigenvalues, self.eigenvectors
        return (lam[:r], V[:, :r]), (lam[r:], V[:, r:])


def tridiagonalize(A):
    """Householder reduction of a symmetric matrix.

    Returns ``(d, e, Q)`` with ``Q.T @ A @ Q`` tridiagonal, ``d`` its diagonal
    and ``e`` its off diagonal (length ``n - 1``).
    """
    a = np.array(as_dense(A), dtype=float, copy=True)
    n = a.shape[0]
    Q = np.eye(n)
    for k in range(n - 2):
        x = a[k + 1 :, k]
        tail = np.linalg.norm(x[1:])
        if tail == 0.0:
            continue
        alpha = -math.copysign(math.hypot(x[0], tail), x[0])
        v = x.copy()
        v[0] -= alpha
        v /= np.linalg.norm(v)
        sub = a[k + 1 :, k + 1 :]
        p = sub @ v
        q = p - (v @ p) * v
        sub -= 2.0 * (np.outer(v, q) + np.outer(q, v))
        a[k + 1 :, k] = 0.0
        a[k, k + 1 :] = 0.0
        a[k + 1, k] = a[k, k + 1] = alpha
        Qk = Q[:, k + 1 :]
        Qk -= 2.0 * np.outer(Qk @ v, v)
    return np.diag(a).copy(), np.diag(a, 1).copy(), Q


def tridiagonal_ql(d, e, z=None, max_iterations=60):
    """Implicitly shifted QL iteration on a symmetric tridiagonal matrix.

    ``d`` is the diagonal, ``e`` the off diagonal. If ``z`` is given, the
    plane rotations are accumulated into its columns in place (pass the
    Householder ``Q`` to obtain eigenvectors of the original matrix).
    Eigenvalues are returned unsorted.
    """
    d = np.array(d, dtype=float, copy=True)
    n = d.shape[0]
    sub = np.zeros(n)
    sub[: n - 1] = e
    eps = np.finfo(float).eps
    for l in range(n):
        iterations = 0
        while True:
            m = l
            while m < n - 1:
                dd = abs(d[m]) + abs(d[m + 1])
                if abs(sub[m]) <= eps * dd:
                    break
                m += 1
            if m == l:
                break
            iterations += 1
            if iterations > max_iterations:
                raise ArithmeticError(
                    "QL iteration did not converge for eigenvalue %d" % l
                )
            g = (d[l + 1] - d[l]) / (2.0 * sub[l])
            r = math.hypot(g, 1.0)
            g = d[m] - d[l] + sub[l] / (g + math.copysign(r, g))
            s = c = 1.0
            p = 0.0
            i = m - 1
            deflated_early = False
            while i >= l:
                f = s * sub[i]
                b = c * sub[i]
                r = math.hypot(f, g)
                sub[i + 1] = r
                if r == 0.0:
                    d[i + 1] -= p
                    sub[m] = 0.0
                    deflated_early = True
                    break
                s = f / r
                c = g / r
                g = d[i + 1] - p
                r = (d[i] - g) * s + 2.0 * c * b
                p = s * r
                d[i + 1] = g + p
                g = c * r - b
                if z is not None:
                    zi1 = z[:, i + 1].copy()
                    z[:, i + 1] = s * z[:, i] + c * zi1
                    z[:, i] = c * z[:, i] - s * zi1
                i -= 1
            if deflated_early:
                continue
            d[l] -= p
            sub[l] = g
            sub[m] = 0.0
    return d


def sym_eig(A, method="lapack", tol=SYMMETRY_TOL):
    """Full eigendecomposition of a symmetric matrix.

    Args:
        A: symmetric dense (or sparse, densified) matrix.
        method (str): ``"lapack"`` or ``"ql"``.
        tol (float): relative symmetry tolerance checked before solving.

    Returns:
        SymEigDecomposition: ascending eigenvalues, orthonormal eigenvectors.

    Raises:
        NotSymmetricError: carrying the maximal asymmetry found.
    """
    A = as_dense(A)
    check_symmetric(A, tol)
    A = 0.5 * (A + A.T)
    n = A.shape[0]
    if n == 0:
        return SymEigDecomposition(np.zeros(0), np.zeros((0, 0)))
    if method == "lapack":
        lam, V = scipy.linalg.eigh(A)
    elif method == "ql":
        d, e, Q = tridiagonalize(A)
        lam = tridiagonal_ql(d, e, Q)
        V = Q
    else:
        raise ValueError("unknown eigensolver method %r" % method)
    order = np.argsort(lam, kind="stable")
    return SymEigDecomposition(np.asarray(lam)[order], np.ascontiguousarray(V[:, order]))


@dataclass(frozen=True)
class RealSpectrum:
    """Real parts of a general spectrum, ascending, with the size of the
    imaginary parts that were discarded."""

    values: np.ndarray
    imag: np.ndarray
    max_imag: float
    is_real: bool


def general_eig_real(B, imag_tol=1e-8):
    """Eigenvalues of a general square matrix reported as reals.

    Realness is reported, not enforced: ``is_real`` is true when the largest
    imaginary part is at most ``imag_tol`` times the spectral radius.
    """
    B = as_dense(B, "B")
    _require_square(B, "B")
    if B.shape[0] == 0:
        return RealSpectrum(np.zeros(0), np.zeros(0), 0.0, True)
    lam = scipy.linalg.eigvals(B)
    order = np.lexsort((lam.imag, lam.real))
    lam = lam[order]
    max_imag = float(np.max(np.abs(lam.imag)))
    radius = float(np.max(np.abs(lam)))
    is_real = max_imag <= imag_tol * max(radius, np.finfo(float).tiny)
    return RealSpectrum(lam.real.copy(), lam.imag.copy(), max_imag, bool(is_real))


# ---------------------------------------------------------------------------
# orthogonalization and singular values


def orthonormalize(X, tol=RANK_DROP_TOL, return_dropped=False):
    """Classical Gram-Schmidt with one unconditional reorthogonalization pass.

    Columns whose norm after both projection passes falls below
    ``tol * ||X||_F`` are dropped.

    Returns:
        Q, or ``(Q, dropped)`` when ``return_dropped`` is true. Without
        ``return_dropped`` a dropped column issues a ``NumericalWarning``.

    Raises:
        EmptyBasisError: when every column is dropped.
    """
    X = as_dense(X, "X")
    n, k = X.shape
    scale = np.linalg.norm(X)
    threshold = tol * scale
    Q = np.zeros((n, k))
    m = 0
    for j in range(k):
        v = X[:, j].copy()
        for _ in range(2):
            if m:
                v -= Q[:, :m] @ (Q[:, :m].T @ v)
        nv = np.linalg.norm(v)
        if nv <= threshold or nv == 0.0:
            continue
        Q[:, m] = v / nv
        m += 1
    dropped = k - m
    if m == 0:
        raise EmptyBasisError(
            "all %d columns were dropped as numerically dependent" % k
        )
    if dropped and not return_dropped:
        warn_if_dropped(dropped, k, "orthonormalize")
    elif dropped:
        logger.debug("orthonormalize dropped %d of %d columns", dropped, k)
    Q = np.ascontiguousarray(Q[:, :m])
    if return_dropped:
        return Q, dropped
    return Q


def complete_basis(Q, rng=None):
    """Orthonormal basis of the orthogonal complement of ``span(Q)``.

    A random block is orthogonalized against ``Q`` with CGS2; any full rank
    completion gives the same singular values downstream.
    """
    Q = as_dense(Q, "Q")
    n, r = Q.shape
    if r >= n:
        return np.zeros((n, 0))
    rng = np.random.default_rng(0) if rng is None else rng
    extra = n - r
    for _ in range(5):
        block = rng.standard_normal((n, extra))
        full, dropped = orthonormalize(
            np.hstack([Q, block]), return_dropped=True
        )
        if dropped == 0:
            return np.ascontiguousarray(full[:, r:])
    raise ArithmeticError("could not complete the basis to an orthonormal frame")


def singular_values(X):
    """Singular values in descending order."""
    X = as_dense(X, "X")
    if X.size == 0:
        return np.zeros(0)
    return scipy.linalg.svdvals(X)


def norm2(X):
    """Spectral norm."""
    s = singular_values(X)
    return float(s[0]) if s.size else 0.0


# ---------------------------------------------------------------------------
# LU


@dataclass(frozen=True)
class LUFactors:
    """Combined LU factors with LAPACK row pivots (``scipy.linalg.lu_factor``)."""

    lu: np.ndarray
    piv: np.ndarray

    @property
    def n(self):
        return self.lu.shape[0]

    def solve(self, b):
        return lu_solve(self, b)

    def unpack(self):
        """Return ``(P, L, U)`` with ``P @ A = L @ U``."""
        n = self.n
        L = np.tril(self.lu, -1) + np.eye(n)
        U = np.triu(self.lu)
        perm = np.arange(n)
        for i, p in enumerate(self.piv):
            perm[i], perm[p] = perm[p], perm[i]
        P = np.eye(n)[perm]
        return P, L, U

    def det(self):
        swaps = int(np.sum(self.piv != np.arange(self.n)))
        sign = -1.0 if swaps % 2 else 1.0
        return sign * float(np.prod(np.diag(self.lu)))


def lu_factor(A):
    """Partial-pivoting LU of a dense square matrix.

    Raises:
        ZeroPivotError: naming the first row whose pivot is exactly zero.
    """
    A = as_dense(A)
    _require_square(A)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        lu, piv = scipy.linalg.lu_factor(A, check_finite=False)
    diag = np.diag(lu)
    zero = np.flatnonzero(diag == 0.0)
    if zero.size:
        raise ZeroPivotError(int(zero[0]))
    return LUFactors(lu, piv)


def lu_solve(f, b):
    b = np.asarray(b, dtype=float)
    if b.shape[0] != f.n:
        raise DimensionMismatchError(
            "right-hand side has %d rows, factors have %d" % (b.shape[0], f.n)
        )
    return scipy.linalg.lu_solve((f.lu, f.piv), b, check_finite=False)


# ---------------------------------------------------------------------------
# ILU(0)


@dataclass(frozen=True)
class ILU0Factors:
    """Incomplete LU without fill-in.

    ``L`` is the strictly lower part (its unit diagonal is implicit) and ``U``
    the upper part including the diagonal. Both share the pattern of the
    factorized matrix.
    """

    L: scipy.sparse.csr_matrix
    U: scipy.sparse.csr_matrix

    @property
    def n(self):
        return self.U.shape[0]

    def solve(self, b):
        return ilu0_solve(self, b)

    def product(self):
        """``L @ U`` with the unit diagonal restored, as CSR."""
        n = self.n
        return as_csr((self.L + scipy.sparse.identity(n, format="csr")) @ self.U)


def ilu0_factor(A):
    """ILU(0) of a sparse square matrix (row-wise IKJ elimination restricted
    to the pattern of ``A``).

    Raises:
        ZeroPivotError: when a diagonal entry is missing from the pattern or
            becomes zero during elimination. No pivot perturbation is done.
    """
    A = as_csr(A)
    _require_square(A)
    n = A.shape[0]
    indptr = A.indptr
    indices = A.indices
    data = A.data.copy()

    diag_pos = np.full(n, -1, dtype=np.int64)
    for i in range(n):
        row = indices[indptr[i] : indptr[i + 1]]
        hit = np.searchsorted(row, i)
        if hit < row.size and row[hit] == i:
            diag_pos[i] = indptr[i] + hit

    work = np.zeros(n)
    mark = np.zeros(n, dtype=bool)
    for i in range(n):
        start, end = indptr[i], indptr[i + 1]
        if diag_pos[i] < 0:
            raise ZeroPivotError(i, "ILU(0)")
        cols = indices[start:end]
        work[cols] = data[start:end]
        mark[cols] = True
        for pos in range(start, diag_pos[i]):
            k = indices[pos]
            lik = work[k] / data[diag_pos[k]]
            work[k] = lik
            ustart, uend = diag_pos[k] + 1, indptr[k + 1]
            if ustart == uend:
                continue
            ucols = indices[ustart:uend]
            keep = mark[ucols]
            work[ucols[keep]] -= lik * data[ustart:uend][keep]
        data[start:end] = work[cols]
        work[cols] = 0.0
        mark[cols] = False
        pivot = data[diag_pos[i]]
        if pivot == 0.0 or not np.isfinite(pivot):
            raise ZeroPivotError(i, "ILU(0)")

    F = scipy.sparse.csr_matrix((data, indices.copy(), indptr.copy()), shape=A.shape)
    L = as_csr(scipy.sparse.tril(F, k=-1))
    U = as_csr(scipy.sparse.triu(F))
    return ILU0Factors(L, U)


def ilu0_solve(f, b):
    """Solve ``(L U) x = b`` by forward and backward substitution."""
    b = np.asarray(b, dtype=float)
    if b.shape[0] != f.n:
        raise DimensionMismatchError(
            "right-hand side has %d rows, factors have %d" % (b.shape[0], f.n)
        )
    n = f.n
    Lfull = f.L + scipy.sparse.identity(n, format="csr")
    y = scipy.sparse.linalg.spsolve_triangular(Lfull.tocsr(), b, lower=True, unit_diagonal=True)
    return scipy.sparse.linalg.spsolve_triangular(f.U, y, lower=False)


def warn_if_dropped(dropped, total, what):
    if dropped:
        dl_warnings.warn("%s: %d of %d columns dropped as dependent" % (what, dropped, total))
