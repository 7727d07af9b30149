"""Projection-based preconditioners and the restricted additive Schwarz
preconditioner.

For a coarse basis ``Z`` (n x r, orthonormal) and an operator ``A`` the
projection matrix is ``E = Z^T A Z``. The three preconditioners are

    P_D = I - A Z E^{-1} Z^T          (deflation)
    P_C = I + Z E^{-1} Z^T            (coarse correction)
    P_A = I - A Z E^{-1} Z^T + Z E^{-1} Z^T   (adapted deflation)

They are never formed. Every application goes through
:meth:`ProjectionOperator.coarse_correction` (``Z E^{-1} Z^T x``) and one
application of ``A``. ``E^{-1}`` is applied through the configured solver:
exact LU, an ILU(0) surrogate, or an explicitly given perturbed matrix ``H``.
"""

import logging
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import scipy.sparse
import scipy.sparse.linalg as spla

from deflation_lab import config
from deflation_lab.errors import (
    DimensionMismatchError,
    NotOrthonormalError,
    SingularMatrixError,
    SingularSubdomainError,
    ZeroPivotError,
)
from deflation_lab.linalg import (
    as_csr,
    as_dense,
    ilu0_factor,
    lu_factor,
    norm2,
    orthonormalize,
)
from deflation_lab.utils import as_vector
from deflation_lab.utils import warnings as dl_warnings

logger = logging.getLogger(__name__)

SOLVERS = ("lu", "ilu0", "perturbed")
KINDS = ("none", "PD", "PC", "PA", "RAS")
ORTHO_TOL = 1e-10
ASSEMBLY_CHUNK = 256


def as_operator(A):
    """Wrap a dense array, sparse matrix or LinearOperator as a LinearOperator."""
    if isinstance(A, spla.LinearOperator):
        return A
    return spla.aslinearoperator(A)


def _apply_block(A, X):
    """``A @ X`` for a dense block ``X``, whatever ``A`` is."""
    if isinstance(A, spla.LinearOperator):
        return A.matmat(X)
    return np.asarray(A @ X)


def orthonormality_defect(Z):
    r = Z.shape[1]
    G = Z.T @ Z
    if scipy.sparse.issparse(G):
        G = G.toarray()
    return float(np.max(np.abs(G - np.eye(r)))) if r else 0.0


class ProjectionOperator:
    """``E = Z^T A Z`` together with the solver used to apply ``E^{-1}``.

    Attributes:
        Z: coarse basis, dense array or CSR matrix (n x r).
        E: assembled projection matrix, dense (r x r).
        solver (str): one of ``"lu"``, ``"ilu0"``, ``"perturbed"``.
        E_sparse: CSR copy of E on its block pattern (``ilu0`` only).
        H: the matrix actually inverted: E for ``lu``, L U for ``ilu0``, the
            given perturbation for ``perturbed``.
        E_asymmetry (float): max |E - E^T|, reported, not enforced.
    """

    def __init__(self, Z, E, solver, factors, H, E_sparse=None, E_asymmetry=0.0):
        self.Z = Z
        self.E = E
        self.solver = solver
        self.factors = factors
        self.H = H
        self.E_sparse = E_sparse
        self.E_asymmetry = E_asymmetry
        self.shape = Z.shape

    @property
    def n(self):
        return self.Z.shape[0]

    @property
    def r(self):
        return self.Z.shape[1]

    @property
    def exact(self):
        return self.solver == "lu"

    def solve(self, y):
        """Apply ``E^{-1}`` (or ``H^{-1}``) to a vector or block."""
        return self.factors.solve(y)

    def restrict(self, x):
        return np.asarray(self.Z.T @ x)

    def prolong(self, t):
        return np.asarray(self.Z @ t)

    def coarse_correction(self, x):
        """``Z E^{-1} Z^T x``."""
        return self.prolong(self.solve(self.restrict(x)))

    def rho_right(self):
        """``||E H^{-1} - I||_2``, H^{-1} used as a right inverse of E."""
        r = self.r
        Hinv = self.solve(np.eye(r))
        return norm2(self.E @ Hinv - np.eye(r))

    def rho_left(self):
        """``||H^{-1} E - I||_2``, H^{-1} used as a left inverse of E."""
        r = self.r
        return norm2(self.solve(self.E) - np.eye(r))

    def __repr__(self):
        return "ProjectionOperator(n=%d, r=%d, solver=%r)" % (self.n, self.r, self.solver)


def assemble_projection_matrix(A, Z, chunk=ASSEMBLY_CHUNK):
    """``Z^T A Z`` assembled densely, ``chunk`` columns of ``Z`` at a time."""
    A = as_operator(A)
    n, r = Z.shape
    E = np.zeros((r, r))
    for start in range(0, r, chunk):
        stop = min(r, start + chunk)
        Zc = Z[:, start:stop]
        if scipy.sparse.issparse(Zc):
            Zc = Zc.toarray()
        E[:, start:stop] = np.asarray(Z.T @ _apply_block(A, Zc))
    return E


def block_pattern(E, blocks, coupling=None):
    """Sparse copy of ``E`` on a block pattern.

    ``blocks`` lists the column index arrays of ``Z`` per subdomain. With
    ``coupling`` (nparts x nparts booleans, see ``Decomposition.coupling``)
    block ``(I, J)`` is kept when subdomains I and J are coupled by the
    matrix; without it, when the block holds a nonzero entry of E. Entries
    that are zero inside a kept block stay as structural nonzeros; entries of
    E outside the kept blocks are dropped.
    """
    r = E.shape[0]
    owner = np.full(r, -1, dtype=np.int64)
    for b, cols in enumerate(blocks):
        owner[np.asarray(cols, dtype=np.int64)] = b
    if np.any(owner < 0):
        raise DimensionMismatchError("coarse blocks do not cover every column of Z")
    nb = len(blocks)
    if coupling is not None:
        touched = np.array(coupling, dtype=bool)
        if touched.shape != (nb, nb):
            raise DimensionMismatchError(
                "coupling is %dx%d but Z has %d blocks" % (touched.shape + (nb,))
            )
    else:
        rows, cols = np.nonzero(E)
        touched = np.zeros((nb, nb), dtype=bool)
        touched[owner[rows], owner[cols]] = True
    # diagonal blocks are always structural
    touched[np.arange(nb), np.arange(nb)] = True
    mask = touched[owner[:, None], owner[None, :]]
    coo = scipy.sparse.coo_matrix(
        (E[mask], np.nonzero(mask)), shape=E.shape
    )
    return as_csr(coo)


def build_projection(
    A, Z, solver="lu", H=None, blocks=None, coupling=None, symmetric=True, ortho_tol=ORTHO_TOL
):
    """Assemble ``E = Z^T A Z`` and factorize the chosen solver eagerly.

    Args:
        A: operator (dense, sparse or LinearOperator, possibly already
            preconditioned).
        Z: orthonormal coarse basis, dense or CSR (n x r).
        solver (str): ``"lu"`` exact LU of E; ``"ilu0"`` ILU(0) of E stored on
            the block pattern given by ``blocks``; ``"perturbed"`` LU of the
            explicit matrix ``H`` standing in for E.
        H: r x r matrix for the ``"perturbed"`` solver.
        blocks: column index arrays of Z per subdomain (``"ilu0"``); without
            them the pattern is the exact nonzero pattern of E.
        coupling: subdomain coupling matrix restricting the block pattern
            (``"ilu0"`` with ``blocks``).
        symmetric (bool): A is symmetric, so an asymmetric E is reported with
            a :class:`~deflation_lab.utils.warnings.NumericalWarning`. Pass
            False for a one-level preconditioned operator.

    Raises:
        NotOrthonormalError: if ``Z^T Z`` differs from I by more than ortho_tol.
        SingularMatrixError: if E (or H) has a zero pivot.
    """
    if solver not in SOLVERS:
        raise ValueError("unknown projection solver %r, expected one of %s" % (solver, SOLVERS))
    if not scipy.sparse.issparse(Z):
        Z = as_dense(Z, "Z")
    n, r = Z.shape
    if r < 1:
        raise DimensionMismatchError("coarse basis has no columns")
    Aop = as_operator(A)
    if Aop.shape != (n, n):
        raise DimensionMismatchError(
            "operator is %d x %d but Z has %d rows" % (Aop.shape[0], Aop.shape[1], n)
        )
    defect = orthonormality_defect(Z)
    if defect > ortho_tol:
        raise NotOrthonormalError(defect, ortho_tol)

    E = assemble_projection_matrix(Aop, Z)
    scale = float(np.max(np.abs(E))) if E.size else 0.0
    asym = float(np.max(np.abs(E - E.T)))
    if asym > 1e-10 * max(scale, np.finfo(float).tiny):
        if symmetric:
            dl_warnings.warn("projection matrix is not symmetric: max asymmetry %.3e" % asym)
        else:
            logger.debug("projection matrix is not symmetric: max asymmetry %.3e", asym)

    E_sparse = None
    try:
        if solver == "lu":
            factors = lu_factor(E)
            Hmat = E
        elif solver == "ilu0":
            E_sparse = block_pattern(E, blocks, coupling) if blocks is not None else as_csr(E)
            f = ilu0_factor(E_sparse)
            factors = f
            Hmat = f.product().toarray()
        else:
            if H is None:
                raise ValueError("solver 'perturbed' needs the matrix H")
            Hmat = as_dense(H, "H")
            if Hmat.shape != (r, r):
                raise DimensionMismatchError("H must be %d x %d" % (r, r))
            factors = lu_factor(Hmat)
    except ZeroPivotError as exc:
        raise SingularMatrixError(
            "projection matrix is singular (pivot row %d): Z is not full rank "
            "against the operator" % exc.row
        ) from None

    logger.debug("built projection operator n=%d r=%d solver=%s", n, r, solver)
    return ProjectionOperator(Z, E, solver, factors, Hmat, E_sparse, asym)


# ---------------------------------------------------------------------------
# applications


def apply_PD(p, A, x):
    """``P_D x = x - A Z E^{-1} Z^T x``."""
    x = as_vector(x, p.n)
    return x - as_operator(A).matvec(p.coarse_correction(x))


def apply_PC(p, A, x):
    """``P_C x = x + Z E^{-1} Z^T x``. ``A`` is unused, kept for a uniform call."""
    x = as_vector(x, p.n)
    return x + p.coarse_correction(x)


def apply_PA(p, A, x):
    """``P_A x = x - A Z E^{-1} Z^T x + Z E^{-1} Z^T x``."""
    x = as_vector(x, p.n)
    q = p.coarse_correction(x)
    return x - as_operator(A).matvec(q) + q


_APPLY = {"PD": apply_PD, "PC": apply_PC, "PA": apply_PA}


def apply_precond(kind, p, A, x):
    if kind == "none":
        return as_vector(x)
    return _APPLY[kind](p, A, x)


def apply_left(kind, p, A, x):
    """``P A x``."""
    return apply_precond(kind, p, A, as_operator(A).matvec(as_vector(x)))


def apply_right(kind, p, A, x):
    """``A P x``."""
    return as_operator(A).matvec(apply_precond(kind, p, A, x))


def deflated_solution(p, A, b, xbar):
    """Recover the solution of ``A x = b`` from a solution ``xbar`` of the
    deflated system ``P_D A xbar = P_D b``:

        x = Z E^{-1} Z^T b + (I - Z E^{-1} Z^T A) xbar
    """
    Aop = as_operator(A)
    b = as_vector(b, p.n, "b")
    xbar = as_vector(xbar, p.n, "xbar")
    return p.coarse_correction(b) + xbar - p.coarse_correction(Aop.matvec(xbar))


def basis_independence_gap(A, Z, C, probes, kind="PD"):
    """Largest relative difference between a preconditioner built on ``Z`` and
    one built on the re-orthonormalized basis ``Z C``.

    Both describe the same coarse space, so the gap is at rounding level.
    """
    X = orthonormalize(np.asarray(Z) @ np.asarray(C))
    p1 = build_projection(A, Z)
    p2 = build_projection(A, X)
    gap = 0.0
    for x in np.atleast_2d(probes):
        y1 = apply_precond(kind, p1, A, x)
        y2 = apply_precond(kind, p2, A, x)
        gap = max(gap, np.linalg.norm(y1 - y2) / max(np.linalg.norm(y1), np.finfo(float).tiny))
    return gap


class PreconditionedOperator(spla.LinearOperator):
    """``P A`` (left) or ``A P`` (right) as a LinearOperator.

    ``kind`` is one of ``"none"``, ``"PD"``, ``"PC"``, ``"PA"``, ``"RAS"``.
    The base operator may itself be a PreconditionedOperator, which is how the
    two-level method is composed: ``PreconditionedOperator(B, "PD", p)`` with
    ``B = PreconditionedOperator(A, "RAS", ras=ras)``.
    """

    def __init__(self, A, kind="none", projection=None, side="left", ras=None):
        if kind not in KINDS:
            raise ValueError("unknown preconditioner kind %r" % kind)
        if side not in ("left", "right"):
            raise ValueError("side must be 'left' or 'right'")
        if kind in _APPLY and projection is None:
            raise ValueError("preconditioner %s needs a projection operator" % kind)
        if kind == "RAS" and ras is None:
            raise ValueError("preconditioner RAS needs a RASPreconditioner")
        self.A = A
        self.Aop = as_operator(A)
        self.kind = kind
        self.side = side
        self.projection = projection
        self.ras = ras
        super().__init__(dtype=np.dtype(float), shape=self.Aop.shape)

    def precondition(self, x):
        """Apply the preconditioner alone."""
        if self.kind == "RAS":
            return apply_RAS(self.ras, x)
        return apply_precond(self.kind, self.projection, self.Aop, x)

    def _precondition_block(self, X):
        if self.kind == "none":
            return X
        if self.kind == "RAS":
            return apply_RAS(self.ras, X)
        Q = self.projection.prolong(self.projection.solve(self.projection.restrict(X)))
        if self.kind == "PC":
            return X + Q
        AQ = _apply_block(self.Aop, Q)
        if self.kind == "PD":
            return X - AQ
        return X - AQ + Q

    def rhs(self, b):
        """Right-hand side of the preconditioned system (``P b`` for left)."""
        b = as_vector(b, self.shape[0], "b")
        return self.precondition(b) if self.side == "left" else b

    def _matvec(self, x):
        x = np.asarray(x, dtype=float).reshape(-1)
        if self.side == "left":
            return self.precondition(self.Aop.matvec(x))
        return self.Aop.matvec(self.precondition(x))

    def _matmat(self, X):
        X = np.asarray(X, dtype=float)
        if self.side == "left":
            return self._precondition_block(_apply_block(self.Aop, X))
        return _apply_block(self.Aop, self._precondition_block(X))

    def __repr__(self):
        return "PreconditionedOperator(kind=%s, side=%s, n=%d)" % (
            self.kind,
            self.side,
            self.shape[0],
        )


# ---------------------------------------------------------------------------
# restricted additive Schwarz


class RASPreconditioner(spla.LinearOperator):
    """One-level restricted additive Schwarz preconditioner

        M^{-1} x = sum_i  R~_i^T A_i^{-1} R_i x

    ``R_i`` restricts to the overlapping subdomain i, ``A_i = R_i A R_i^T`` is
    factorized once with SuperLU, and ``R~_i^T`` prolongates only the
    unknowns owned by subdomain i.

    Args:
        A: sparse system matrix.
        overlapping: list of index arrays, one per subdomain.
        ownership: array giving the owning subdomain of every unknown.
        max_workers: threads used to factorize the local matrices.
    """

    def __init__(self, A, overlapping, ownership, max_workers=None):
        A = as_csr(A)
        n = A.shape[0]
        ownership = np.asarray(ownership, dtype=np.int64)
        if ownership.shape != (n,):
            raise DimensionMismatchError("ownership map must have one entry per unknown")
        nparts = len(overlapping)
        if ownership.min() < 0 or ownership.max() >= nparts:
            raise DimensionMismatchError("ownership map refers to unknown subdomains")
        covered = np.zeros(n, dtype=bool)
        self.overlapping = []
        self.local_owned = []
        self.owned = []
        for i, idx in enumerate(overlapping):
            idx = np.unique(np.asarray(idx, dtype=np.int64))
            owned = np.flatnonzero(ownership == i)
            if not np.all(np.isin(owned, idx)):
                raise DimensionMismatchError(
                    "overlapping set of subdomain %d does not contain its owned set" % i
                )
            covered[idx] = True
            self.overlapping.append(idx)
            self.owned.append(owned)
            self.local_owned.append(np.searchsorted(idx, owned))
        if not covered.all():
            raise DimensionMismatchError("overlapping subdomains do not cover every unknown")

        self.A = A
        self.nparts = nparts
        self.ownership = ownership
        workers = max_workers or config.THREADS
        with ThreadPoolExecutor(max_workers=max(1, min(workers, nparts))) as executor:
            self.local_solvers = list(executor.map(self._factorize, range(nparts)))
        logger.debug("RAS with %d subdomains ready", nparts)
        super().__init__(dtype=np.dtype(float), shape=A.shape)

    def _factorize(self, i):
        idx = self.overlapping[i]
        Ai = self.A[idx][:, idx].tocsc()
        try:
            return spla.splu(Ai)
        except RuntimeError as exc:
            raise SingularSubdomainError(i, str(exc)) from None

    @classmethod
    def from_decomposition(cls, A, decomposition, max_workers=None):
        return cls(A, decomposition.overlapping, decomposition.ownership, max_workers)

    def apply(self, x):
        """Apply ``M^{-1}`` to a vector or to a block of column vectors."""
        x = np.asarray(x, dtype=float)
        if x.shape[0] != self.shape[0]:
            raise DimensionMismatchError("vector length does not match the operator")
        y = np.zeros_like(x)
        for i in range(self.nparts):
            idx = self.overlapping[i]
            yi = self.local_solvers[i].solve(np.ascontiguousarray(x[idx]))
            y[self.owned[i]] = yi[self.local_owned[i]]
        return y

    def _matvec(self, x):
        return self.apply(np.asarray(x, dtype=float).reshape(-1))

    def _matmat(self, X):
        return self.apply(np.asarray(X, dtype=float))


def build_RAS(A, decomposition, max_workers=None):
    return RASPreconditioner.from_decomposition(A, decomposition, max_workers)


def apply_RAS(ras, x):
    """``M^{-1} x`` for a vector or a block of columns."""
    return ras.apply(x)
