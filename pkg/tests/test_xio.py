import json

import numpy as np
import pytest
import scipy.sparse

from deflation_lab.analysis import BoundReport
from deflation_lab.coarse import CoarseSpace
from deflation_lab.linalg import RealSpectrum
from deflation_lab.pde import partition, Grid2D
from deflation_lab.utils import version_string
from deflation_lab.xio import (
    read_coarse_space,
    read_dense_csv,
    read_decomposition,
    read_history,
    read_matrix_market,
    read_spectrum,
    read_table,
    write_bound_reports,
    write_coarse_space,
    write_dense_csv,
    write_decomposition,
    write_history,
    write_matrix_market,
    write_spectrum,
    write_table,
)


def test_table_rows_carry_seed_and_version(tmp_path):
    path = write_table(tmp_path / "t" / "rows.csv", [{"a": 1, "b": 0.1}, {"a": 2, "b": 1e-17}], seed=5)
    frame = read_table(path)
    assert list(frame.columns) == ["a", "b", "seed", "version"]
    assert (frame["seed"] == 5).all()
    assert (frame["version"] == version_string()).all()
    assert frame["b"].iloc[1] == 1e-17


def test_matrix_market(tmp_path, small_diffusion):
    _, A, _, _ = small_diffusion
    path = write_matrix_market(str(tmp_path / "A.mtx"), A)
    B = read_matrix_market(path)
    assert scipy.sparse.issparse(B)
    assert abs(B - A).max() == 0.0


def test_dense_csv_has_shape_header(tmp_path):
    path = write_dense_csv(str(tmp_path / "M.csv"), np.arange(6.0).reshape(2, 3))
    with open(path) as f:
        assert f.read() == "2,3\n0,1,2\n3,4,5\n"
    M = np.random.default_rng(4).standard_normal((4, 2))
    back = read_dense_csv(write_dense_csv(str(tmp_path / "N.csv"), M))
    assert back.shape == (4, 2) and np.array_equal(back, M)


def test_dense_csv_rejects_bad_shape(tmp_path):
    path = tmp_path / "M.csv"
    path.write_text("2,3\n0,1,2\n")
    with pytest.raises(ValueError):
        read_dense_csv(str(path))
    path.write_text("c0,c1\n0,1\n")
    with pytest.raises(ValueError):
        read_dense_csv(str(path))


def test_coarse_space_with_sidecar(tmp_path):
    Z = np.linalg.qr(np.random.default_rng(3).standard_normal((9, 2)))[0]
    space = CoarseSpace(Z, {"kind": "perturbed", "eps": 10.0}, [np.array([0]), np.array([1])])
    path = str(tmp_path / "Z.csv")
    write_coarse_space(path, space, seed=3)
    back = read_coarse_space(path)
    assert np.array_equal(back.Z, Z)
    assert back.provenance == {"kind": "perturbed", "eps": 10.0}
    assert [b.tolist() for b in back.blocks] == [[0], [1]]
    with open(tmp_path / "Z.json") as f:
        assert json.load(f)["seed"] == 3


def test_coarse_space_without_sidecar(tmp_path):
    path = tmp_path / "Z.csv"
    path.write_text("2,2\n1,0\n0,1\n")
    space = read_coarse_space(str(path))
    assert space.kind == "loaded" and space.r == 2


def test_decomposition_file(tmp_path):
    dec = partition(Grid2D.square(6), 4)
    path = write_decomposition(str(tmp_path / "dec.json"), dec, seed=1)
    with open(path) as f:
        data = json.load(f)
    assert sorted(data["owned"]) == ["0", "1", "2", "3"]
    back = read_decomposition(path)
    assert np.array_equal(back.ownership, dec.ownership)


def test_spectrum_and_history(tmp_path):
    spec = RealSpectrum(np.array([0.5, 1.0]), np.array([0.0, 1e-12]), 1e-12, True)
    path = write_spectrum(str(tmp_path / "s.csv"), spec, seed=2, label="PA")
    values, imag = read_spectrum(path)
    assert np.array_equal(values, spec.values) and np.array_equal(imag, spec.imag)
    assert read_table(path)["operator"].iloc[0] == "PA"

    history = np.array([1.0, 0.3, 1e-13])
    path = write_history(str(tmp_path / "h.csv"), history, seed=2, label="PD")
    assert np.array_equal(read_history(path), history)
    assert read_table(path)["iteration"].tolist() == [0, 1, 2]


def test_bound_reports(tmp_path):
    rep = BoundReport("deflation-inexact-solve", -0.1, 2.0, 0.1, spectrum=np.array([0.5]), contained=True)
    path = write_bound_reports(str(tmp_path / "r.json"), [rep], seed=9)
    with open(path) as f:
        data = json.load(f)
    assert data["seed"] == 9
    assert data["reports"][0]["bound"] == "deflation-inexact-solve"
    assert data["reports"][0]["contained"] is True


def test_writes_are_reproducible(tmp_path):
    rows = [{"x": 1 / 3, "y": np.pi}]
    a = write_table(str(tmp_path / "a.csv"), rows, seed=1)
    b = write_table(str(tmp_path / "b.csv"), rows, seed=1)
    with open(a) as fa, open(b) as fb:
        assert fa.read() == fb.read()
