import numpy as np
import pytest

from deflation_lab.krylov import GmresConfig, arnoldi, extract_ritz, gmres
from deflation_lab.utils.warnings import NumericalWarning


def test_gmres_identity():
    b = np.array([1.0, -2.0, 0.5])
    res = gmres(np.eye(3), b)
    assert res.converged and res.iterations == 1
    assert np.allclose(res.x, b)
    assert len(res.history) == res.iterations + 1
    assert res.history[0] == pytest.approx(1.0)


def test_gmres_solves_nonsymmetric(rng):
    n = 40
    B = 4 * np.eye(n) + rng.standard_normal((n, n)) / np.sqrt(n)
    b = rng.standard_normal(n)
    res = gmres(B, b, cfg=GmresConfig(tol=1e-12, max_iterations=n))
    assert res.converged
    assert np.allclose(res.x, np.linalg.solve(B, b), atol=1e-9)
    assert res.final_residual <= 1e-12


def test_gmres_history_is_monotone_and_capped():
    B = np.diag(np.arange(1.0, 51.0))
    res = gmres(B, np.ones(50), cfg=GmresConfig(tol=1e-14, max_iterations=5))
    assert not res.converged
    assert res.iterations == 5 and len(res.history) == 6
    assert np.all(np.diff(res.history) <= 1e-15)


def test_gmres_initial_guess_already_solves():
    B = np.diag([1.0, 2.0])
    res = gmres(B, [1.0, 2.0], x0=[1.0, 1.0])
    assert res.converged and res.iterations == 0


def test_gmres_rejects_zero_rhs():
    with pytest.raises(ValueError):
        gmres(np.eye(2), np.zeros(2))


@pytest.mark.parametrize("kwargs", [{"tol": 0.0}, {"max_iterations": 0}])
def test_gmres_config_validation(kwargs):
    with pytest.raises(ValueError):
        GmresConfig(**kwargs)


def test_arnoldi_relation(rng):
    B = rng.standard_normal((25, 25))
    basis = arnoldi(B, rng.standard_normal(25), 10)
    assert basis.m == 10
    assert basis.relation_defect(B) < 1e-12
    assert basis.orthogonality_loss() < 1e-13


def test_gmres_keeps_basis(rng):
    B = np.diag(np.linspace(1.0, 3.0, 30))
    res = gmres(B, rng.standard_normal(30), cfg=GmresConfig(tol=1e-8), keep_basis=True)
    assert res.basis.m == res.iterations
    assert res.basis.relation_defect(B) < 1e-12


def test_ritz_pairs_of_exhausted_space(rng):
    n = 10
    Q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    lam = np.arange(1.0, n + 1.0)
    B = (Q * lam) @ Q.T
    basis = arnoldi(B, rng.standard_normal(n), n)
    pairs = extract_ritz(basis, B, threshold=np.inf)
    assert len(pairs) == n
    assert np.allclose(pairs.values, lam, atol=1e-8)
    assert max(p.residual for p in pairs) < 1e-8


def test_ritz_threshold_and_complex_values(rng):
    B = np.zeros((5, 5))
    B[:2, :2] = [[0.1, -1.0], [1.0, 0.1]]
    B[2:, 2:] = np.diag([0.2, 0.7, 3.0])
    basis = arnoldi(B, np.ones(5), 5)
    with pytest.warns(NumericalWarning):
        pairs = extract_ritz(basis, B, threshold=0.5)
    assert pairs.excluded_complex == 2
    assert np.allclose(pairs.values, [0.2])


def test_gmres_reference_norm_scales_history():
    B = np.diag([1.0, 2.0, 4.0])
    b = np.array([3.0, 0.0, 4.0])
    plain = gmres(B, b, cfg=GmresConfig(tol=1e-12))
    scaled = gmres(B, b, cfg=GmresConfig(tol=1e-12), ref_norm=50.0)
    assert plain.history[0] == pytest.approx(1.0)
    assert scaled.history[0] == pytest.approx(0.1)
    assert np.allclose(scaled.history, plain.history[: scaled.history.size] / 10.0)
    # a larger reference norm reaches the tolerance no later
    assert scaled.iterations <= plain.iterations


@pytest.mark.parametrize("ref_norm", [0.0, -1.0])
def test_gmres_rejects_nonpositive_reference_norm(ref_norm):
    with pytest.raises(ValueError):
        gmres(np.eye(2), np.ones(2), ref_norm=ref_norm)


@pytest.mark.slow
def test_ritz_values_of_diagonal_test_matrix():
    from deflation_lab.experiments.diagonal import DiagonalTestMatrix

    problem = DiagonalTestMatrix()
    res = gmres(
        problem.matrix(),
        problem.rhs(),
        cfg=GmresConfig(tol=1e-12, max_iterations=400),
        keep_basis=True,
    )
    assert res.converged
    pairs = extract_ritz(res.basis, problem.matrix(), 0.5)
    small = problem.entries[: problem.r]
    assert len(pairs) == problem.r
    assert np.allclose(pairs.values, small, rtol=1e-2)
    for i, v in enumerate(pairs.vectors.T):
        assert abs(v[i]) > 0.99
