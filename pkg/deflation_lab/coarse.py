"""Coarse spaces: exact eigenvector spaces, randomly perturbed spaces,
Ritz-split block spaces, and the angle between two spaces."""

import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.sparse

from deflation_lab import config
from deflation_lab.errors import (
    DenseCapExceededError,
    DimensionMismatchError,
    EmptyBasisError,
)
from deflation_lab.krylov import RitzPair, RitzPairs
from deflation_lab.linalg import (
    RANK_DROP_TOL,
    as_dense,
    complete_basis,
    norm2,
    orthonormalize,
    singular_values,
    sym_eig,
    warn_if_dropped,
)
from deflation_lab.precond import as_operator, orthonormality_defect
from deflation_lab.utils import make_rng
from deflation_lab.utils import warnings as dl_warnings

logger = logging.getLogger(__name__)

# explicit complements are built automatically up to this order
EXPLICIT_ANGLE_MAX_N = 500
ANGLE_CROSS_TOL = 1e-10


@dataclass
class CoarseSpace:
    """Orthonormal basis Z (n x r) and where it came from.

    ``Z`` is dense, or CSR for Ritz-split spaces. ``provenance["kind"]`` is one
    of ``exact-eigenvectors``, ``perturbed``, ``ritz-split``,
    ``rayleigh-ritz`` or ``loaded``. ``blocks`` holds the column indices owned
    by each subdomain of a Ritz-split space.
    """

    Z: object
    provenance: dict = field(default_factory=dict)
    blocks: Optional[list] = None
    values: Optional[np.ndarray] = None

    @property
    def n(self):
        return self.Z.shape[0]

    @property
    def r(self):
        return self.Z.shape[1]

    @property
    def kind(self):
        return self.provenance.get("kind", "loaded")

    def dense(self):
        if scipy.sparse.issparse(self.Z):
            return self.Z.toarray()
        return np.asarray(self.Z)

    def orthonormality_defect(self):
        return orthonormality_defect(self.Z)


@dataclass(frozen=True)
class SubspaceAngle:
    """Largest principal angle between two equal-dimension subspaces.

    ``sin_alt`` and ``cos_alt`` are the second formula of each pair, kept so
    callers can inspect the agreement; ``cos_alt`` is None when the explicit
    complements were not built.
    """

    sin: float
    cos: float
    sin_alt: float
    cos_alt: Optional[float] = None

    @property
    def dist(self):
        return self.sin

    @property
    def tan(self):
        return np.inf if self.cos == 0.0 else self.sin / self.cos

    @property
    def theta(self):
        return float(np.arctan2(self.sin, self.cos))

    @property
    def sin_gap(self):
        return abs(self.sin - self.sin_alt)

    @property
    def cos_gap(self):
        return 0.0 if self.cos_alt is None else abs(self.cos - self.cos_alt)

    def to_dict(self):
        return {
            "sin": self.sin,
            "cos": self.cos,
            "sin_alt": self.sin_alt,
            "cos_alt": self.cos_alt,
        }


def _basis(Z):
    if isinstance(Z, CoarseSpace):
        return Z.dense()
    if scipy.sparse.issparse(Z):
        return Z.toarray()
    return as_dense(Z, "Z")


def exact_coarse_space(A, r, method="lapack"):
    """Eigenvectors of the ``r`` smallest eigenvalues of a symmetric ``A``."""
    A = A.toarray() if scipy.sparse.issparse(A) else as_dense(A)
    n = A.shape[0]
    if not 0 < r < n:
        raise ValueError("coarse dimension must satisfy 0 < r < n, got r=%d, n=%d" % (r, n))
    dec = sym_eig(A, method=method)
    (lam, V), _ = dec.split(r)
    logger.debug("exact coarse space r=%d, largest deflated eigenvalue %.3e", r, lam[-1])
    return CoarseSpace(
        np.ascontiguousarray(V),
        {"kind": "exact-eigenvectors", "r": int(r)},
        values=lam.copy(),
    )


def perturb_space(V, eps, rng=None, seed=None):
    """``orthonormalize(V + R / eps)`` with R uniform on [0, 1).

    Raises:
        EmptyBasisError: when the perturbed block is rank deficient.
    """
    if not eps > 0:
        raise ValueError("perturbation scale eps must be positive, got %r" % eps)
    V = _basis(V)
    rng = rng if rng is not None else make_rng(seed)
    R = rng.random(V.shape)
    Z, dropped = orthonormalize(V + R / eps, return_dropped=True)
    if dropped:
        raise EmptyBasisError(
            "perturbed basis lost rank: %d of %d columns dependent" % (dropped, V.shape[1])
        )
    return CoarseSpace(Z, {"kind": "perturbed", "eps": float(eps), "seed": seed})


def subspace_angle(Z, V, rng=None, explicit=None, cap=None):
    """Angle between ``span(Z)`` and ``span(V)``.

    sin is computed as ``||(I - V V^T) Z||_2`` (which equals
    ``sigma_max(V_perp^T Z)``) and cross-checked with ``||(I - Z Z^T) V||_2``.
    cos is ``sigma_min(Z^T V)``; with ``explicit`` the complements are built
    and ``sigma_min(Z_perp^T V_perp)`` serves as its cross-check.

    Args:
        explicit: build the complements; by default only for small n.
        cap: largest n for which explicit complements are allowed.
    """
    Z = _basis(Z)
    V = _basis(V)
    if Z.shape != V.shape:
        raise DimensionMismatchError(
            "subspaces differ in shape: %s vs %s" % (Z.shape, V.shape)
        )
    n, r = Z.shape
    cap = config.DENSE_CAP if cap is None else cap
    if explicit is None:
        explicit = n <= EXPLICIT_ANGLE_MAX_N
    if explicit and n > cap:
        raise DenseCapExceededError(n, cap)

    sin = norm2(Z - V @ (V.T @ Z))
    sin_alt = norm2(V - Z @ (Z.T @ V))
    cos = float(singular_values(Z.T @ V)[-1])
    cos_alt = None
    if explicit and r < n:
        rng = rng if rng is not None else make_rng(0)
        V_perp = complete_basis(V, rng)
        Z_perp = complete_basis(Z, rng)
        cos_alt = float(singular_values(Z_perp.T @ V_perp)[-1])
        sin_explicit = norm2(Z.T @ V_perp)
        if abs(sin_explicit - sin) > ANGLE_CROSS_TOL:
            dl_warnings.warn(
                "explicit complement gives sin %.3e, projection gives %.3e" % (sin_explicit, sin)
            )

    angle = SubspaceAngle(
        float(np.clip(sin, 0.0, 1.0)),
        float(np.clip(cos, 0.0, 1.0)),
        float(np.clip(sin_alt, 0.0, 1.0)),
        None if cos_alt is None else float(np.clip(cos_alt, 0.0, 1.0)),
    )
    if angle.sin_gap > ANGLE_CROSS_TOL or angle.cos_gap > ANGLE_CROSS_TOL:
        dl_warnings.warn(
            "angle formulas disagree: sin gap %.3e, cos gap %.3e" % (angle.sin_gap, angle.cos_gap)
        )
    return angle


def res_max(pairs):
    """Largest residual ``||B v - lambda v||`` over a set of Ritz pairs."""
    pairs = list(pairs)
    if not pairs:
        raise ValueError("res_max needs at least one Ritz pair")
    return max(float(p.residual) for p in pairs)


def _ownership_sets(ownership, n):
    owned = getattr(ownership, "owned", ownership)
    sets = [np.asarray(idx, dtype=np.int64).reshape(-1) for idx in owned]
    for i, idx in enumerate(sets):
        if idx.size == 0:
            raise ValueError("subdomain %d owns no rows" % i)
    counts = np.bincount(np.concatenate(sets), minlength=n) if sets else np.zeros(n)
    if counts.shape[0] != n or np.any(counts != 1):
        raise ValueError("ownership must partition all %d indices exactly once" % n)
    return sets


def ritz_split(pairs, ownership, tol=RANK_DROP_TOL, sparse=True):
    """Block-diagonal coarse space from Ritz vectors split across subdomains.

    Row block ``i`` of the Ritz vectors is orthonormalized on its own and
    placed in its own set of columns. Numerically null columns of a block are
    dropped and counted in ``provenance["dropped"]``.

    Args:
        pairs: RitzPairs, a list of RitzPair, or a dense n x k block.
        ownership: Decomposition or sequence of owned index arrays.
        sparse (bool): return Z as CSR.
    """
    if isinstance(pairs, RitzPairs) or (
        isinstance(pairs, (list, tuple)) and pairs and isinstance(pairs[0], RitzPair)
    ):
        V = np.column_stack([p.vector for p in pairs])
    else:
        V = _basis(pairs)
    n, k = V.shape
    if k == 0:
        raise EmptyBasisError("no Ritz vectors to split")
    sets = _ownership_sets(ownership, n)

    rows, cols, vals = [], [], []
    blocks = []
    offset = 0
    dropped = 0
    for idx in sets:
        try:
            Qi, d = orthonormalize(V[idx, :], tol=tol, return_dropped=True)
        except EmptyBasisError:
            Qi, d = np.zeros((idx.size, 0)), k
        dropped += d
        m = Qi.shape[1]
        blocks.append(np.arange(offset, offset + m))
        if m:
            rr, cc = np.nonzero(Qi)
            rows.append(idx[rr])
            cols.append(cc + offset)
            vals.append(Qi[rr, cc])
        offset += m

    if offset == 0:
        raise EmptyBasisError("every subdomain block was dropped")
    Z = scipy.sparse.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(n, offset),
    )
    Z.sum_duplicates()
    Z.sort_indices()
    warn_if_dropped(dropped, k * len(sets), "ritz_split")
    logger.debug("ritz_split: %d subdomains, %d columns, %d dropped", len(sets), offset, dropped)
    provenance = {
        "kind": "ritz-split",
        "nparts": len(sets),
        "r": int(k),
        "columns": int(offset),
        "dropped": int(dropped),
    }
    return CoarseSpace(Z if sparse else Z.toarray(), provenance, blocks)


def rayleigh_ritz(A, Z):
    """Ritz pairs of a symmetric ``A`` from the space spanned by ``Z``."""
    Zd = _basis(Z)
    Aop = as_operator(A)
    AZ = Aop.matmat(Zd)
    G = Zd.T @ AZ
    dec = sym_eig(0.5 * (G + G.T))
    vectors = Zd @ dec.eigenvectors
    AV = AZ @ dec.eigenvectors
    pairs = []
    for j, lam in enumerate(dec.eigenvalues):
        v = vectors[:, j]
        nv = np.linalg.norm(v)
        v, Av = v / nv, AV[:, j] / nv
        pairs.append(RitzPair(float(lam), v, float(np.linalg.norm(Av - lam * v))))
    return RitzPairs(pairs)
