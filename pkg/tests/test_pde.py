from _common_helpers import laplacian_1d
import numpy as np
import pytest
import scipy.sparse

from deflation_lab.errors import TilingError
from deflation_lab.pde import (
    Decomposition,
    Grid2D,
    KappaField,
    add_overlap,
    assemble,
    decompose,
    kappa_continuous,
    kappa_skyscraper,
    layout_shape,
    partition,
    tilings,
)


def test_grid():
    grid = Grid2D.square(101)
    assert grid.n == 10201
    assert grid.h == pytest.approx(1 / 102)
    X, Y = grid.coordinates()
    assert X.shape == (101, 101)
    assert X[0, 0] == pytest.approx(grid.h) and Y[-1, 0] == pytest.approx(101 * grid.h)
    assert grid.index(3, 2) == 2 * 101 + 3


def test_skyscraper():
    assert kappa_skyscraper(0.05, 0.05) == pytest.approx(1e4)
    assert kappa_skyscraper(0.15, 0.05) == pytest.approx(1.0)
    # [9y] = 2 gives the third storey
    assert kappa_skyscraper(0.05, 0.25) == pytest.approx(3e4)


def test_continuous():
    # 4 pi (x + y) + 0.1 = pi / 2
    s = (np.pi / 2 - 0.1) / (4 * np.pi)
    assert kappa_continuous(s / 2, s / 2) == pytest.approx(1e6 / 3)
    assert np.all(kappa_continuous(np.linspace(0, 1, 50), np.linspace(1, 0, 50)) >= 1.0)


def test_constant_field_gives_laplacian():
    grid = Grid2D.square(4)
    A, b = assemble(grid, KappaField.constant())
    T = laplacian_1d(4)
    expected = np.kron(np.eye(4), T) + np.kron(T, np.eye(4))
    assert np.allclose(A.toarray(), expected)
    assert np.allclose(b, grid.h**2)


def test_assembled_matrix_is_spd():
    grid = Grid2D(7, 5)
    A, _ = assemble(grid, KappaField.skyscraper())
    D = A.toarray()
    assert A.shape == (35, 35)
    assert np.allclose(D, D.T)
    assert np.linalg.eigvalsh(D)[0] > 0.0


def test_nonpositive_kappa_names_location():
    grid = Grid2D.square(3)
    with pytest.raises(ValueError, match="not positive"):
        assemble(grid, lambda x, y: x - 0.5)
    with pytest.raises(ValueError):
        KappaField.constant(0.0)
    with pytest.raises(ValueError):
        KappaField.from_name("marble")


@pytest.mark.parametrize("nparts,shape", [(16, (4, 4)), (32, (8, 4)), (64, (8, 8)), (128, (16, 8))])
def test_default_tilings(nparts, shape):
    assert tilings(nparts, Grid2D.square(101))[0] == shape


def test_partition_sizes():
    grid = Grid2D.square(10)
    dec = partition(grid, 6)
    assert dec.shape == (3, 2)
    sizes = [o.size for o in dec.owned]
    assert sum(sizes) == grid.n
    assert max(sizes) - min(sizes) <= 5
    assert np.array_equal(np.sort(np.concatenate(dec.owned)), np.arange(grid.n))


def test_partition_errors():
    grid = Grid2D.square(4)
    with pytest.raises(TilingError) as exc:
        partition(grid, 7)
    assert exc.value.valid == []
    with pytest.raises(TilingError, match="4x2"):
        partition(Grid2D.square(10), 8, shape=(3, 3))


def test_single_domain_overlap_is_noop():
    grid = Grid2D.square(5)
    A, _ = assemble(grid, KappaField.constant())
    dec = decompose(grid, A, 1, level=2)
    assert dec.nparts == 1
    assert np.array_equal(dec.overlapping[0], np.arange(grid.n))


def test_overlap_rings():
    grid = Grid2D(8, 1)
    A = scipy.sparse.csr_matrix(laplacian_1d(8))
    dec = partition(grid, 2)
    assert dec.owned[0].tolist() == [0, 1, 2, 3]
    grown = add_overlap(dec, 2, A)
    assert grown.overlapping[0].tolist() == [0, 1, 2, 3, 4, 5]
    assert grown.overlapping[1].tolist() == [2, 3, 4, 5, 6, 7]
    assert grown.level == 2
    with pytest.raises(ValueError):
        add_overlap(dec, 1)


def test_decomposition_dict_round_trip(small_diffusion):
    _, _, _, dec = small_diffusion
    data = dec.to_dict()
    assert set(data["owned"]) == {"0", "1", "2", "3"}
    back = Decomposition.from_dict(data)
    assert np.array_equal(back.ownership, dec.ownership)
    assert all(np.array_equal(a, b) for a, b in zip(back.overlapping, dec.overlapping))
    assert back.shape == dec.shape and back.level == dec.level


def test_coupling_of_square_tiles(small_diffusion):
    _, A, _, dec = small_diffusion
    assert dec.shape == (2, 2)
    C = dec.coupling(A)
    assert C.shape == (4, 4) and np.array_equal(C, C.T)
    assert C.diagonal().all()
    # five-point stencil: diagonally opposite tiles share no edge
    assert not C[0, 3] and not C[1, 2]
    assert C[0, 1] and C[0, 2]


def test_strips_layout():
    assert layout_shape("strips", 4) == (4, 1)
    assert layout_shape("square", 4) is None
    with pytest.raises(ValueError):
        layout_shape("spiral", 4)
    grid = Grid2D.square(12)
    A, _ = assemble(grid, KappaField.constant())
    dec = decompose(grid, A, 4, level=1, shape=layout_shape("strips", 4))
    C = dec.coupling(A)
    assert np.array_equal(C, np.abs(np.subtract.outer(np.arange(4), np.arange(4))) <= 1)
