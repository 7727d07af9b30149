"""Full GMRES with two-pass classical Gram-Schmidt, the Arnoldi relation and
Ritz pair extraction.

GMRES is never restarted. The Hessenberg matrix is kept unrotated next to its
Givens-rotated copy so that the Arnoldi basis of a finished solve can be
handed to :func:`extract_ritz`.
"""

import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.linalg

from deflation_lab.precond import as_operator
from deflation_lab.utils import as_vector
from deflation_lab.utils import warnings as dl_warnings

logger = logging.getLogger(__name__)

DEFAULT_MAX_ITERATIONS = 300


@dataclass(frozen=True)
class GmresConfig:
    """Stopping rule of a GMRES run.

    ``tol`` bounds the residual relative to a reference norm, by default the
    norm of the right-hand side handed to :func:`gmres`. Reorthogonalization
    is always on.
    """

    tol: float = 1e-12
    max_iterations: int = DEFAULT_MAX_ITERATIONS

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError("GMRES tolerance must be positive, got %r" % self.tol)
        if int(self.max_iterations) < 1:
            raise ValueError("GMRES needs at least one iteration")


@dataclass
class ArnoldiBasis:
    """``B V[:, :m] = V @ H`` with V orthonormal (n x (m+1)) and H upper
    Hessenberg ((m+1) x m)."""

    V: np.ndarray
    H: np.ndarray

    @property
    def m(self):
        return self.H.shape[1]

    def relation_defect(self, B):
        """``||B V_m - V_{m+1} H||_F``."""
        Bop = as_operator(B)
        m = self.m
        BV = Bop.matmat(self.V[:, :m]) if m else np.zeros((self.V.shape[0], 0))
        return float(np.linalg.norm(BV - self.V @ self.H))

    def orthogonality_loss(self):
        """``max |V^T V - I|`` over the nonzero basis vectors."""
        V = self.V
        keep = np.linalg.norm(V, axis=0) > 0
        V = V[:, keep]
        return float(np.max(np.abs(V.T @ V - np.eye(V.shape[1])))) if V.size else 0.0


@dataclass
class GmresResult:
    """Solution and convergence record.

    ``history[k]`` is the relative residual after ``k`` iterations, so
    ``history[0]`` is the initial one and ``len(history) == iterations + 1``.
    """

    x: np.ndarray
    history: np.ndarray
    converged: bool
    iterations: int
    breakdown: bool = False
    basis: Optional[ArnoldiBasis] = None

    @property
    def final_residual(self):
        return float(self.history[-1])


def _cgs2(V, k, w):
    """Orthogonalize ``w`` against the first ``k`` columns of V, twice."""
    Vk = V[:, :k]
    h = Vk.T @ w
    w = w - Vk @ h
    h2 = Vk.T @ w
    w = w - Vk @ h2
    return h + h2, w


def gmres(B, b, x0=None, cfg=None, keep_basis=False, ref_norm=None):
    """Solve ``B x = b`` by full GMRES.

    Args:
        B: operator (dense, sparse or LinearOperator); for a left
            preconditioned system pass the preconditioned operator and its
            preconditioned right-hand side.
        b: right-hand side, nonzero.
        x0: initial guess, zero by default.
        cfg (GmresConfig): tolerance and iteration cap.
        keep_basis (bool): attach the Arnoldi basis to the result.
        ref_norm (float): norm the residuals are divided by. Defaults to
            ``||b||``. The experiment drivers pass the norm of the right-hand
            side before the projection preconditioner is applied.

    Returns:
        GmresResult. Running out of iterations is not an error: the result
        comes back with ``converged=False`` and its full history.
    """
    cfg = cfg or GmresConfig()
    Bop = as_operator(B)
    n = Bop.shape[0]
    b = as_vector(b, n, "b")
    if not np.any(b):
        raise ValueError("right-hand side must be nonzero")
    bnorm = float(np.linalg.norm(b)) if ref_norm is None else float(ref_norm)
    if not bnorm > 0.0:
        raise ValueError("reference norm must be positive, got %r" % ref_norm)
    x0 = np.zeros(n) if x0 is None else as_vector(x0, n, "x0")

    r0 = b - Bop.matvec(x0) if np.any(x0) else b.copy()
    beta = float(np.linalg.norm(r0))
    history = [beta / bnorm]
    m_max = int(cfg.max_iterations)
    if history[0] <= cfg.tol:
        basis = ArnoldiBasis(np.zeros((n, 1)), np.zeros((1, 0))) if keep_basis else None
        return GmresResult(x0, np.array(history), True, 0, False, basis)

    V = np.zeros((n, m_max + 1))
    H = np.zeros((m_max + 1, m_max))
    R = np.zeros((m_max + 1, m_max))
    cs = np.zeros(m_max)
    sn = np.zeros(m_max)
    g = np.zeros(m_max + 1)
    g[0] = beta
    V[:, 0] = r0 / beta

    k = 0
    breakdown = False
    converged = False
    for j in range(m_max):
        w = np.asarray(Bop.matvec(V[:, j]), dtype=float).reshape(-1)
        wnorm = float(np.linalg.norm(w))
        h, w = _cgs2(V, j + 1, w)
        hnext = float(np.linalg.norm(w))
        H[: j + 1, j] = h
        H[j + 1, j] = hnext

        col = H[: j + 2, j].copy()
        for i in range(j):
            t = cs[i] * col[i] + sn[i] * col[i + 1]
            col[i + 1] = -sn[i] * col[i] + cs[i] * col[i + 1]
            col[i] = t
        denom = math.hypot(col[j], col[j + 1])
        if denom == 0.0:
            cs[j], sn[j] = 1.0, 0.0
        else:
            cs[j], sn[j] = col[j] / denom, col[j + 1] / denom
        col[j] = denom
        col[j + 1] = 0.0
        R[: j + 2, j] = col
        g[j + 1] = -sn[j] * g[j]
        g[j] = cs[j] * g[j]

        k = j + 1
        history.append(abs(g[j + 1]) / bnorm)
        breakdown = hnext <= np.finfo(float).eps * wnorm
        if not breakdown:
            V[:, j + 1] = w / hnext
        if history[-1] <= cfg.tol or breakdown:
            converged = True
            break

    diag = np.abs(np.diag(R[:k, :k]))
    usable = k
    if breakdown and diag.size and diag[-1] <= np.finfo(float).eps * max(diag.max(), 1.0):
        usable = k - 1
    if usable:
        y = scipy.linalg.solve_triangular(R[:usable, :usable], g[:usable])
        x = x0 + V[:, :usable] @ y
    else:
        x = x0.copy()

    logger.debug(
        "gmres %s after %d iterations, relative residual %.3e",
        "converged" if converged else "stopped",
        k,
        history[-1],
    )
    basis = ArnoldiBasis(V[:, : k + 1].copy(), H[: k + 1, :k].copy()) if keep_basis else None
    return GmresResult(x, np.array(history), converged, k, breakdown, basis)


def arnoldi(B, v0, m):
    """``m`` steps of Arnoldi with CGS2 started from ``v0``."""
    Bop = as_operator(B)
    n = Bop.shape[0]
    v0 = as_vector(v0, n, "v0")
    V = np.zeros((n, m + 1))
    H = np.zeros((m + 1, m))
    V[:, 0] = v0 / np.linalg.norm(v0)
    for j in range(m):
        w = np.asarray(Bop.matvec(V[:, j]), dtype=float).reshape(-1)
        wnorm = float(np.linalg.norm(w))
        h, w = _cgs2(V, j + 1, w)
        hnext = float(np.linalg.norm(w))
        H[: j + 1, j] = h
        H[j + 1, j] = hnext
        if hnext <= np.finfo(float).eps * wnorm:
            return ArnoldiBasis(V[:, : j + 2], H[: j + 2, : j + 1])
        V[:, j + 1] = w / hnext
    return ArnoldiBasis(V, H)


@dataclass(frozen=True)
class RitzPair:
    value: float
    vector: np.ndarray
    residual: float


class RitzPairs(list):
    """List of :class:`RitzPair` that remembers how many complex Ritz values
    were left out."""

    def __init__(self, pairs=(), excluded_complex=0):
        super().__init__(pairs)
        self.excluded_complex = excluded_complex

    @property
    def values(self):
        return np.array([p.value for p in self])

    @property
    def vectors(self):
        if not self:
            return np.zeros((0, 0))
        return np.column_stack([p.vector for p in self])


def ritz_residual(B, value, vector):
    Bop = as_operator(B)
    return float(np.linalg.norm(Bop.matvec(vector) - value * vector))


def extract_ritz(basis, B, threshold, imag_tol=1e-8):
    """Ritz pairs of ``B`` below ``threshold`` from a finished Arnoldi basis.

    The square Hessenberg block is diagonalized, Ritz vectors are lifted as
    ``V_m y`` and normalized, and every residual ``||B v - lambda v||`` is
    recomputed against ``B``. Complex Ritz values with
    ``|imag| > imag_tol * |value|`` are left out and counted.

    Returns:
        RitzPairs sorted by ascending value.
    """
    m = basis.m
    if m == 0:
        return RitzPairs()
    Hm = basis.H[:m, :m]
    Vm = basis.V[:, :m]
    theta, Y = scipy.linalg.eig(Hm)
    pairs = []
    excluded = 0
    for i in range(m):
        lam = theta[i]
        if abs(lam.imag) > imag_tol * abs(lam):
            excluded += 1
            continue
        value = float(lam.real)
        if not value < threshold:
            continue
        v = Vm @ Y[:, i].real
        nv = np.linalg.norm(v)
        if nv == 0.0:
            continue
        v = v / nv
        pairs.append(RitzPair(value, v, ritz_residual(B, value, v)))
    pairs.sort(key=lambda p: p.value)
    if excluded:
        dl_warnings.warn("%d complex Ritz values excluded" % excluded)
    logger.debug("extracted %d Ritz pairs below %g", len(pairs), threshold)
    return RitzPairs(pairs, excluded)
