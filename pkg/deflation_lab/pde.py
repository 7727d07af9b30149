"""Heterogeneous diffusion test problem on the unit square.

``-div(kappa grad u) = f`` with ``u = 0`` on the boundary, discretized by a
cell-centred five-point finite-volume scheme on the interior nodes of a
uniform grid, plus the rectangular decompositions used by the Schwarz
preconditioner.
"""

import logging
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Tuple

import numpy as np
import scipy.sparse

from deflation_lab.errors import TilingError
from deflation_lab.linalg import as_csr

logger = logging.getLogger(__name__)

SKYSCRAPER_PEAK = 1e4
CONTINUOUS_AMPLITUDE = 1e6 / 3.0
DEFAULT_OVERLAP = 2
LAYOUTS = ("square", "strips")


@dataclass(frozen=True)
class Grid2D:
    """``nx`` by ``ny`` interior nodes of the unit square.

    Node ``(i, j)`` sits at ``((i + 1) hx, (j + 1) hy)`` and has the global
    index ``j * nx + i``.
    """

    nx: int
    ny: int

    def __post_init__(self):
        if self.nx < 1 or self.ny < 1:
            raise ValueError("grid needs at least one interior node per axis")

    @classmethod
    def square(cls, m):
        return cls(m, m)

    @property
    def hx(self):
        return 1.0 / (self.nx + 1)

    @property
    def hy(self):
        return 1.0 / (self.ny + 1)

    @property
    def h(self):
        return self.hx

    @property
    def n(self):
        return self.nx * self.ny

    def coordinates(self):
        """``(X, Y)`` arrays of shape ``(ny, nx)``."""
        x = self.hx * np.arange(1, self.nx + 1)
        y = self.hy * np.arange(1, self.ny + 1)
        return np.meshgrid(x, y)

    def index(self, i, j):
        return j * self.nx + i


def kappa_skyscraper(x, y):
    """``1e4 ([9y] + 1)`` where both ``[9x]`` and ``[9y]`` are even, else 1."""
    fx = np.floor(9.0 * np.asarray(x, dtype=float))
    fy = np.floor(9.0 * np.asarray(y, dtype=float))
    even = (np.mod(fx, 2) == 0) & (np.mod(fy, 2) == 0)
    return np.where(even, SKYSCRAPER_PEAK * (fy + 1.0), 1.0)


def kappa_continuous(x, y):
    """``max(|1e6/3 sin(4 pi (x + y) + 0.1)|, 1)``.

    The oscillating formula changes sign on the square; its magnitude, floored
    at 1, keeps the operator positive definite.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    raw = CONTINUOUS_AMPLITUDE * np.sin(4.0 * np.pi * (x + y) + 0.1)
    return np.maximum(np.abs(raw), 1.0)


@dataclass(frozen=True)
class KappaField:
    kind: str
    evaluator: Callable
    value: Optional[float] = None

    def __call__(self, x, y):
        return self.evaluator(x, y)

    @classmethod
    def skyscraper(cls):
        return cls("skyscraper", kappa_skyscraper)

    @classmethod
    def continuous(cls):
        return cls("continuous", kappa_continuous)

    @classmethod
    def constant(cls, c=1.0):
        if not c > 0:
            raise ValueError("constant diffusion coefficient must be positive, got %r" % c)
        return cls("constant", lambda x, y: np.full(np.broadcast(x, y).shape, float(c)), float(c))

    @classmethod
    def from_name(cls, name, value=1.0):
        if name == "skyscraper":
            return cls.skyscraper()
        if name == "continuous":
            return cls.continuous()
        if name == "constant":
            return cls.constant(value)
        raise ValueError("unknown diffusion field %r" % name)


def _harmonic(a, b):
    return 2.0 * a * b / (a + b)


def assemble(grid, kappa, f=1.0):
    """Stiffness matrix and right-hand side of the diffusion problem.

    Faces between neighbouring nodes use the harmonic mean of the two nodal
    coefficients; faces on the Dirichlet boundary use the node's own
    coefficient. For a square grid and ``kappa = 1`` this is the five-point
    Laplacian with diagonal 4, and the right-hand side is ``h^2 f``.

    Returns:
        (A, b): CSR matrix of order ``nx * ny`` and the load vector.

    Raises:
        ValueError: if kappa is not positive and finite at some node.
    """
    X, Y = grid.coordinates()
    K = np.asarray(kappa(X, Y), dtype=float).reshape(grid.ny, grid.nx)
    bad = ~(np.isfinite(K) & (K > 0))
    if bad.any():
        j, i = np.argwhere(bad)[0]
        raise ValueError(
            "diffusion coefficient %r at (x=%.6g, y=%.6g) is not positive"
            % (K[j, i], X[j, i], Y[j, i])
        )

    nx, ny = grid.nx, grid.ny
    wx = grid.hy / grid.hx
    wy = grid.hx / grid.hy
    idx = np.arange(grid.n).reshape(ny, nx)

    # face coefficients: east/west between columns, north/south between rows
    kx = wx * _harmonic(K[:, :-1], K[:, 1:])
    ky = wy * _harmonic(K[:-1, :], K[1:, :])

    diag = np.zeros((ny, nx))
    diag[:, :-1] += kx
    diag[:, 1:] += kx
    diag[:-1, :] += ky
    diag[1:, :] += ky
    diag[:, 0] += wx * K[:, 0]
    diag[:, -1] += wx * K[:, -1]
    diag[0, :] += wy * K[0, :]
    diag[-1, :] += wy * K[-1, :]

    rows = [idx.ravel(), idx[:, :-1].ravel(), idx[:, 1:].ravel(), idx[:-1, :].ravel(), idx[1:, :].ravel()]
    cols = [idx.ravel(), idx[:, 1:].ravel(), idx[:, :-1].ravel(), idx[1:, :].ravel(), idx[:-1, :].ravel()]
    vals = [diag.ravel(), -kx.ravel(), -kx.ravel(), -ky.ravel(), -ky.ravel()]
    A = scipy.sparse.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(grid.n, grid.n),
    )
    A = as_csr(A)
    b = np.full(grid.n, grid.hx * grid.hy) * f
    logger.debug(
        "assembled %s diffusion problem: n=%d, nnz=%d", getattr(kappa, "kind", "custom"), grid.n, A.nnz
    )
    return A, b


@dataclass
class Decomposition:
    """Non-overlapping ownership plus overlapping index sets.

    ``ownership[k]`` is the subdomain owning unknown ``k``; ``owned[i]`` and
    ``overlapping[i]`` are sorted index arrays with
    ``owned[i] <= overlapping[i]``.
    """

    nparts: int
    ownership: np.ndarray
    owned: List[np.ndarray]
    overlapping: List[np.ndarray]
    level: int = 0
    shape: Optional[Tuple[int, int]] = None
    grid: Optional[Tuple[int, int]] = field(default=None)

    @property
    def n(self):
        return self.ownership.shape[0]

    def coupling(self, A):
        """``C[i, j]`` is True when a row owned by subdomain i has a nonzero
        in a column owned by subdomain j; the diagonal is always True."""
        G = as_csr(A).tocoo()
        C = np.zeros((self.nparts, self.nparts), dtype=bool)
        C[self.ownership[G.row], self.ownership[G.col]] = True
        C[np.arange(self.nparts), np.arange(self.nparts)] = True
        return C

    def to_dict(self):
        return {
            "nparts": self.nparts,
            "level": self.level,
            "shape": list(self.shape) if self.shape else None,
            "grid": list(self.grid) if self.grid else None,
            "owned": {str(i): idx.tolist() for i, idx in enumerate(self.owned)},
            "overlapping": {str(i): idx.tolist() for i, idx in enumerate(self.overlapping)},
        }

    @classmethod
    def from_dict(cls, data):
        nparts = int(data["nparts"])
        owned = [np.asarray(data["owned"][str(i)], dtype=np.int64) for i in range(nparts)]
        overlapping = [
            np.asarray(data["overlapping"][str(i)], dtype=np.int64) for i in range(nparts)
        ]
        n = int(sum(idx.size for idx in owned))
        ownership = np.empty(n, dtype=np.int64)
        for i, idx in enumerate(owned):
            ownership[idx] = i
        shape = tuple(data["shape"]) if data.get("shape") else None
        grid = tuple(data["grid"]) if data.get("grid") else None
        return cls(nparts, ownership, owned, overlapping, int(data.get("level", 0)), shape, grid)


def tilings(nparts, grid):
    """Every ``p x q`` factorization of ``nparts`` that fits the grid,
    most square first (``p >= q`` preferred on ties)."""
    out = []
    for q in range(1, nparts + 1):
        if nparts % q:
            continue
        p = nparts // q
        if p <= grid.nx and q <= grid.ny:
            out.append((p, q))
    out.sort(key=lambda pq: (abs(np.log(pq[0] / pq[1])), -pq[0]))
    return out


def partition(grid, nparts, shape=None):
    """Rectangular tiling of the grid into ``nparts`` subdomains.

    ``p`` tiles along x and ``q`` along y (16 -> 4x4, 32 -> 8x4, 64 -> 8x8,
    128 -> 16x8 by default); tile sizes differ by at most one node.

    Raises:
        TilingError: if no ``p x q`` factorization fits, or ``shape`` is not
            one of the valid ones.
    """
    if nparts < 1:
        raise ValueError("need at least one subdomain")
    valid = tilings(nparts, grid)
    if shape is not None:
        shape = tuple(int(s) for s in shape)
        if shape not in valid:
            raise TilingError(nparts, valid)
    elif not valid:
        raise TilingError(nparts, valid)
    else:
        shape = valid[0]
    p, q = shape

    xlabel = np.concatenate([np.full(len(c), k) for k, c in enumerate(np.array_split(np.arange(grid.nx), p))])
    ylabel = np.concatenate([np.full(len(c), k) for k, c in enumerate(np.array_split(np.arange(grid.ny), q))])
    ownership = (ylabel[:, None] * p + xlabel[None, :]).ravel().astype(np.int64)
    owned = [np.flatnonzero(ownership == i) for i in range(nparts)]
    logger.debug("partitioned %dx%d grid into %dx%d tiles", grid.nx, grid.ny, p, q)
    return Decomposition(nparts, ownership, owned, [o.copy() for o in owned], 0, shape, (grid.nx, grid.ny))


def add_overlap(dec, level=DEFAULT_OVERLAP, adjacency=None):
    """Grow every subdomain by ``level`` rounds of neighbour addition in the
    matrix graph ``adjacency``."""
    if level < 0:
        raise ValueError("overlap level must be nonnegative")
    if level == 0 or dec.nparts == 1:
        return Decomposition(
            dec.nparts, dec.ownership, dec.owned, [o.copy() for o in dec.overlapping], dec.level, dec.shape, dec.grid
        )
    if adjacency is None:
        raise ValueError("overlap needs the adjacency (matrix graph)")
    G = as_csr(adjacency)
    G = scipy.sparse.csr_matrix((np.ones_like(G.data), G.indices, G.indptr), shape=G.shape)
    overlapping = []
    for idx in dec.overlapping:
        mask = np.zeros(dec.n, dtype=bool)
        mask[idx] = True
        for _ in range(level):
            mask |= (G @ mask.astype(float)) > 0
        overlapping.append(np.flatnonzero(mask))
    return Decomposition(
        dec.nparts, dec.ownership, dec.owned, overlapping, dec.level + level, dec.shape, dec.grid
    )


def layout_shape(layout, nparts):
    """Tile shape for a named layout: ``None`` picks the most square tiling,
    ``"strips"`` cuts the grid into ``nparts`` vertical strips."""
    if layout not in LAYOUTS:
        raise ValueError("unknown layout %r, expected one of %s" % (layout, LAYOUTS))
    return (nparts, 1) if layout == "strips" else None


def decompose(grid, A, nparts, level=DEFAULT_OVERLAP, shape=None):
    return add_overlap(partition(grid, nparts, shape), level, A)
