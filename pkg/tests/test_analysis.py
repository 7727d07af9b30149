import numpy as np
import pytest

from deflation_lab.analysis import (
    SpectralSplit,
    basis_at_angle,
    bound_inexact_A,
    bound_inexact_C,
    bound_inexact_D,
    bound_PA,
    bound_PC,
    bound_PD,
    commutation_gap,
    corollary_pairing,
    eps_C,
    eps_D,
    eta_D,
    exact_space_spectrum,
    inexact_solve_trial,
    materialize,
    perturbed_space_trial,
    right_spectrum_check,
    spectrum_of,
    xi_A,
    xi_D,
)
from deflation_lab.coarse import SubspaceAngle, subspace_angle
from deflation_lab.errors import DenseCapExceededError, HypothesisViolatedError
from deflation_lab.precond import PreconditionedOperator, build_projection
from deflation_lab.utils.warnings import NumericalWarning

ZERO = SubspaceAngle(0.0, 1.0, 0.0, 1.0)


def test_split_ordering():
    with pytest.raises(ValueError):
        SpectralSplit([2.0], [1.0, 3.0])
    split = SpectralSplit([0.2, 0.1], [3.0, 1.0])
    assert split.r == 2 and split.n == 4
    assert split.lam_norm == pytest.approx(0.2)
    assert split.scale == pytest.approx(3.0)


def test_exact_space_collapses_every_bound(spd):
    A, split = spd(20, 3)
    p = build_projection(A, split.V)
    lo, hi = split.lam_perp[0], split.lam_perp[-1]

    rep = bound_PD(split, p.E, ZERO, spectrum_of(PreconditionedOperator(A, "PD", p)))
    assert (rep.lower, rep.upper) == pytest.approx((lo, hi))
    assert rep.contained and rep.cluster["within"]

    rep = bound_PA(split, p.E, ZERO, spectrum_of(PreconditionedOperator(A, "PA", p)))
    assert (rep.lower, rep.upper) == pytest.approx((min(1.0, lo), max(1.0, hi)))
    assert rep.contained

    rep = bound_PC(split, p.E, ZERO, spectrum_of(PreconditionedOperator(A, "PC", p)))
    expected = (min(1 + split.lam[0], lo), max(1 + split.lam[-1], hi))
    assert (rep.lower, rep.upper) == pytest.approx(expected)
    assert rep.contained and rep.details["positive"]


@pytest.mark.parametrize("kind", ["PD", "PC", "PA"])
def test_exact_space_spectrum(spd, kind):
    for n, r in [(15, 3), (30, 8), (60, 5), (10, 1)]:
        A, split = spd(n, r)
        p = build_projection(A, split.V)
        spec = spectrum_of(PreconditionedOperator(A, kind, p))
        assert np.allclose(spec.values, exact_space_spectrum(split, kind), atol=1e-9 * split.scale)


def test_exact_inexact_solve_reduces_to_exact(spd):
    A, split = spd(12, 2)
    p = build_projection(A, split.V)
    spec = spectrum_of(PreconditionedOperator(A, "PD", p))
    rep = bound_inexact_D(split, 0.0, spec)
    assert rep.width == 0.0
    assert rep.lower == 0.0 and rep.upper == pytest.approx(split.lam_perp[-1])
    assert rep.contained
    assert bound_inexact_C(split, 0.0).width == 0.0
    assert bound_inexact_A(split, 0.0, 0.0).width == 0.0


def test_widths_are_monotone():
    sins = np.linspace(0.0, 0.95, 40)
    coss = np.sqrt(1 - sins**2)
    eta = [eta_D(10.0, s) for s in sins]
    epsd = [eps_D(10.0, s, c, 2.0, 50.0) for s, c in zip(sins, coss)]
    epsc = [eps_C(10.0, s, c, 50.0) for s, c in zip(sins, coss)]
    for widths in (eta, epsd, epsc):
        assert np.all(np.diff(widths) >= 0.0)
    rhos = np.linspace(0.0, 1.0, 20)
    assert np.all(np.diff([xi_D(r, 0.1) for r in rhos]) >= 0.0)
    assert np.all(np.diff([xi_A(r, r, 0.1) for r in rhos]) >= 0.0)


def test_orthogonal_space_is_rejected(spd, rng):
    A, split = spd(10, 2)
    Z = basis_at_angle(split, 1.0, rng)
    angle = subspace_angle(Z, split.V)
    E = build_projection(A, Z).E
    for bound in (bound_PD, bound_PA, bound_PC):
        with pytest.raises(HypothesisViolatedError):
            bound(split, E, angle)


@pytest.mark.parametrize("kind", ["PD", "PA", "PC"])
def test_perturbed_space_containment(kind):
    rng = np.random.default_rng(7)
    for _ in range(10):
        rep = perturbed_space_trial(kind, 20, 3, 0.1, rng)
        assert rep.hypothesis == "ok"
        assert rep.contained, rep.to_dict()


@pytest.mark.parametrize("kind", ["PD", "PA", "PC"])
def test_inexact_solve_containment(kind):
    rng = np.random.default_rng(11)
    for _ in range(10):
        rep = inexact_solve_trial(kind, 20, 3, 1e-6, rng)
        assert not rep.violation, rep.to_dict()


def test_adapted_deflation_pairs_with_deflation(spd, rng):
    A, split = spd(30, 4)
    Z = basis_at_angle(split, 0.2, rng)
    p = build_projection(A, Z)
    spec_PD = spectrum_of(PreconditionedOperator(A, "PD", p))
    spec_PA = spectrum_of(PreconditionedOperator(A, "PA", p))
    assert corollary_pairing(spec_PD, spec_PA, 4) < 1e-8
    rep = bound_PA(split, p.E, subspace_angle(Z, split.V), spec_PA, spectrum_PD=spec_PD)
    assert rep.details["pairing_mismatch"] < 1e-8
    assert rep.contained


def test_perturbed_solve_leaves_small_eigenvalues_near_zero(spd, rng):
    A, split = spd(20, 3)
    E = split.V.T @ A @ split.V
    H = E + 1e-4 * rng.random((3, 3))
    p = build_projection(A, split.V, solver="perturbed", H=H)
    spec = spectrum_of(PreconditionedOperator(A, "PD", p))
    rep = bound_inexact_D(split, p.rho_right(), spec)
    near_zero = np.sort(np.abs(spec.values))[:3]
    # no longer exactly zero, but inside the predicted band around it
    assert np.all(near_zero > 0.0)
    assert np.all(near_zero <= rep.width * (1 + 1e-9) + 1e-12)


def test_non_real_spectrum_fails_the_hypothesis():
    split = SpectralSplit([0.1], [1.0, 2.0])
    from deflation_lab.linalg import general_eig_real

    spec = general_eig_real(np.array([[1.0, -1.0, 0.0], [1.0, 1.0, 0.0], [0.0, 0.0, 50.0]]))
    with pytest.warns(NumericalWarning, match="not real"):
        rep = bound_inexact_C(split, 0.01, spec)
    assert rep.hypothesis == "failed"
    assert not rep.contained
    assert not rep.violation


def test_spectrum_of_identity_preconditioner():
    A = np.diag([1.0, 2.0, 3.0])
    spec = spectrum_of(PreconditionedOperator(A, "none"))
    assert np.allclose(spec.values, [1, 2, 3])
    assert spec.max_imag == 0.0


def test_spectrum_of_respects_cap():
    with pytest.raises(DenseCapExceededError) as exc:
        materialize(np.eye(5), cap=4)
    assert "Ritz" in str(exc.value)


def test_coarse_correction_spectrum_is_real_and_positive(spd, orthonormal_basis):
    A, split = spd(20, 3)
    p = build_projection(A, orthonormal_basis(20, 3))
    spec = spectrum_of(PreconditionedOperator(A, "PC", p))
    assert spec.max_imag <= 1e-6 * spec.values[-1]
    assert spec.values[0] > 0.0


def test_commutation_and_right_preconditioning(spd, orthonormal_basis, rng):
    A, split = spd(15, 2)
    p_exact = build_projection(A, split.V)
    probes = rng.standard_normal((3, 15))
    for kind in ("PD", "PC", "PA"):
        assert commutation_gap(A, p_exact, kind, probes) < 1e-12
    p = build_projection(A, orthonormal_basis(15, 2))
    check = right_spectrum_check(A, p, "PC")
    # P A and A P are similar
    assert check["max_gap"] < 1e-8 * check["left_max"]


@pytest.mark.slow
@pytest.mark.parametrize("kind", ["PD", "PC", "PA"])
def test_exact_space_spectrum_many_matrices(rng, kind):
    from deflation_lab.analysis import random_spd

    for _ in range(20):
        n = int(rng.integers(10, 60))
        r = int(rng.integers(1, 6))
        A, split = random_spd(n, r, rng)
        p = build_projection(A, split.V)
        spec = spectrum_of(PreconditionedOperator(A, kind, p))
        assert np.allclose(spec.values, exact_space_spectrum(split, kind), atol=1e-9 * split.scale)
