"""Spectral bounds of the preconditioned operators as executable checks.

Each ``bound_*`` function turns one inequality into a :class:`BoundReport`:
the predicted interval, and, when a computed spectrum is supplied, whether
that spectrum lies inside it. Two families are covered:

* a perturbed coarse space ``Z`` with an exact ``E = Z^T A Z``, measured by
  the angle between ``span(Z)`` and the eigenvector space ``span(V)``;
* the exact space ``Z = V`` with ``E^{-1}`` replaced by ``H^{-1}``, measured
  by the rho-norms ``||E H^{-1} - I||_2`` and ``||H^{-1} E - I||_2``.
"""

import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.stats

from deflation_lab import config
from deflation_lab.errors import DenseCapExceededError, HypothesisViolatedError
from deflation_lab.linalg import (
    RealSpectrum,
    as_dense,
    general_eig_real,
    norm2,
    sym_eig,
)
from deflation_lab.precond import (
    PreconditionedOperator,
    apply_left,
    apply_right,
    as_operator,
    build_projection,
)
from deflation_lab.utils import warnings as dl_warnings

logger = logging.getLogger(__name__)

CONTAINMENT_SLACK = 1e-9
CLUSTER_TOL = 1e-8
SPECTRUM_SYMMETRY_TOL = 1e-10
PAIRING_TOL = 1e-8
MIN_COS = 1e-12
REALNESS_TOL = 1e-8

BOUND_IDS = (
    "deflation-perturbed-space",
    "adapted-perturbed-space",
    "coarse-correction-perturbed-space",
    "deflation-inexact-solve",
    "coarse-correction-inexact-solve",
    "adapted-inexact-solve",
)


@dataclass
class SpectralSplit:
    """The ``r`` smallest eigenvalues (Λ) and the remaining ones (Λ_⊥)."""

    lam: np.ndarray
    lam_perp: np.ndarray
    V: Optional[np.ndarray] = None
    V_perp: Optional[np.ndarray] = None

    def __post_init__(self):
        self.lam = np.sort(np.asarray(self.lam, dtype=float))
        self.lam_perp = np.sort(np.asarray(self.lam_perp, dtype=float))
        if self.lam.size and self.lam_perp.size and self.lam[-1] > self.lam_perp[0]:
            raise ValueError("deflated eigenvalues must not exceed the remaining ones")

    @classmethod
    def from_matrix(cls, A, r, method="lapack"):
        dec = sym_eig(as_dense(A), method=method)
        (lam, V), (lam_perp, V_perp) = dec.split(r)
        return cls(lam, lam_perp, V, V_perp)

    @property
    def r(self):
        return self.lam.size

    @property
    def n(self):
        return self.lam.size + self.lam_perp.size

    @property
    def lam_norm(self):
        """``||Λ||_2``."""
        return float(np.max(np.abs(self.lam))) if self.lam.size else 0.0

    @property
    def scale(self):
        """Largest eigenvalue magnitude of A."""
        both = np.concatenate([self.lam, self.lam_perp])
        return float(np.max(np.abs(both))) if both.size else 1.0


@dataclass
class BoundReport:
    """One predicted interval and, if a spectrum was given, its verdict.

    ``hypothesis`` is ``"ok"``, ``"failed"`` (a precondition such as a real
    spectrum does not hold, so the interval proves nothing) or ``"violated"``
    (the interval could not be formed). ``slack`` is the largest distance by
    which a checked eigenvalue falls outside the slackened interval, 0 when
    contained.
    """

    bound: str
    lower: float
    upper: float
    width: float
    spectrum: np.ndarray = field(default_factory=lambda: np.zeros(0))
    cluster: dict = field(default_factory=dict)
    contained: Optional[bool] = None
    slack: float = 0.0
    hypothesis: str = "ok"
    max_imag: float = 0.0
    details: dict = field(default_factory=dict)

    @property
    def violation(self):
        return self.hypothesis == "ok" and self.contained is False

    def to_dict(self):
        return {
            "bound": self.bound,
            "lower": self.lower,
            "upper": self.upper,
            "width": self.width,
            "spectrum": [float(v) for v in self.spectrum],
            "cluster": self.cluster,
            "contained": self.contained,
            "slack": self.slack,
            "hypothesis": self.hypothesis,
            "max_imag": self.max_imag,
            "details": self.details,
        }


# ---------------------------------------------------------------------------
# bound widths


def eta_D(lam_max_perp, sin):
    return lam_max_perp * (sin + sin**2)


def eps_D(lam_max_perp, sin, cos, E_norm, E_inv_norm):
    tan = np.inf if cos == 0.0 else sin / cos
    return eta_D(lam_max_perp, sin) + E_inv_norm * (E_norm + lam_max_perp) ** 2 * tan**2


def eps_C(lam_max_perp, sin, cos, E_inv_norm):
    tan = np.inf if cos == 0.0 else sin / cos
    return 0.5 * (lam_max_perp * E_inv_norm + 1.0) * tan + sin + sin**2


def xi_D(rho, lam_norm):
    return rho * lam_norm


def xi_C(rho):
    return rho


def xi_A(rho1, rho2, lam_norm):
    return rho1 * lam_norm + rho2


def projection_norms(E):
    """``(||E||_2, ||E^{-1}||_2)`` of a symmetric positive definite E."""
    E = as_dense(E, "E")
    lam = sym_eig(0.5 * (E + E.T), tol=np.inf).eigenvalues
    if lam.size == 0 or lam[0] <= 0.0:
        raise HypothesisViolatedError("projection matrix is not positive definite")
    return float(lam[-1]), float(1.0 / lam[0])


def bound_widths(split, E, angle):
    """``eta_D``, ``eps_D`` and ``eps_C`` for a coarse space at ``angle``."""
    E_norm, E_inv_norm = projection_norms(E)
    lmax = float(split.lam_perp[-1])
    return {
        "eta_D": eta_D(lmax, angle.sin),
        "eps_D": eps_D(lmax, angle.sin, angle.cos, E_norm, E_inv_norm),
        "eps_C": eps_C(lmax, angle.sin, angle.cos, E_inv_norm),
        "E_norm": E_norm,
        "E_inv_norm": E_inv_norm,
    }


# ---------------------------------------------------------------------------
# containment


def _as_spectrum(spectrum):
    if spectrum is None:
        return None, 0.0, True
    if isinstance(spectrum, RealSpectrum):
        return np.sort(spectrum.values), spectrum.max_imag, spectrum.is_real
    return np.sort(np.asarray(spectrum, dtype=float).reshape(-1)), 0.0, True


def _judge(report, values, scale):
    pad = CONTAINMENT_SLACK * scale
    lo = report.lower - pad
    hi = report.upper + pad
    below = lo - values[values < lo] if values.size else np.zeros(0)
    above = values[values > hi] - hi if values.size else np.zeros(0)
    worst = max([0.0] + list(below) + list(above))
    report.contained = worst == 0.0
    report.slack = float(worst)
    return report


def _cluster(values, target, count, tol):
    """Take the ``count`` eigenvalues closest to ``target`` out of ``values``."""
    if count == 0:
        return values, {"target": target, "count": 0, "tolerance": tol, "max_deviation": 0.0, "within": True}
    order = np.argsort(np.abs(values - target), kind="stable")
    picked = values[order[:count]]
    rest = np.sort(values[order[count:]])
    dev = float(np.max(np.abs(picked - target)))
    return rest, {
        "target": target,
        "count": int(count),
        "tolerance": tol,
        "max_deviation": dev,
        "within": dev <= tol,
    }


def _require_angle(angle):
    if angle.cos < MIN_COS:
        raise HypothesisViolatedError(
            "coarse space is orthogonal to the eigenvector space (cos theta = %.3e)" % angle.cos
        )


def bound_PD(split, E, angle, spectrum=None):
    """Interval of the nonzero eigenvalues of ``P_D A`` for a perturbed space.

    The ``r`` eigenvalues closest to zero form the deflated cluster and are
    excluded from the containment check; their distance from zero is reported.
    """
    _require_angle(angle)
    w = bound_widths(split, E, angle)
    lo = float(split.lam_perp[0]) - w["eps_D"]
    hi = float(split.lam_perp[-1]) + w["eta_D"]
    report = BoundReport("deflation-perturbed-space", lo, hi, w["eps_D"], details=w)
    values, max_imag, _ = _as_spectrum(spectrum)
    if values is None:
        return report
    tol = CLUSTER_TOL * split.scale
    rest, report.cluster = _cluster(values, 0.0, split.r, tol)
    report.spectrum = values
    report.max_imag = max_imag
    return _judge(report, rest, split.scale)


def corollary_pairing(spec_PD, spec_PA, r):
    """Largest mismatch between the nonzero eigenvalues of ``P_D A`` and the
    non-unit eigenvalues of ``P_A A``, both built on the same Z and E."""
    d, _, _ = _as_spectrum(spec_PD)
    a, _, _ = _as_spectrum(spec_PA)
    if d.size != a.size:
        raise ValueError("spectra differ in size: %d vs %d" % (d.size, a.size))
    d_rest, _ = _cluster(d, 0.0, r, np.inf)
    a_rest, _ = _cluster(a, 1.0, r, np.inf)
    if d_rest.size == 0:
        return 0.0
    return float(np.max(np.abs(d_rest - a_rest)))


def bound_PA(split, E, angle, spectrum=None, spectrum_PD=None):
    """Interval of every eigenvalue of ``P_A A`` for a perturbed space.

    With ``spectrum_PD`` the pairing with ``P_D A`` is checked as well and a
    mismatch above the pairing tolerance makes the report not contained.
    """
    _require_angle(angle)
    w = bound_widths(split, E, angle)
    lo = min(1.0, float(split.lam_perp[0]) - w["eps_D"])
    hi = max(1.0, float(split.lam_perp[-1]) + w["eta_D"])
    report = BoundReport("adapted-perturbed-space", lo, hi, w["eps_D"], details=w)
    values, max_imag, _ = _as_spectrum(spectrum)
    if values is None:
        return report
    report.spectrum = values
    report.max_imag = max_imag
    _, report.cluster = _cluster(values, 1.0, split.r, CLUSTER_TOL * split.scale)
    _judge(report, values, split.scale)
    if spectrum_PD is not None:
        mismatch = corollary_pairing(spectrum_PD, values, split.r)
        report.details["pairing_mismatch"] = mismatch
        if mismatch > PAIRING_TOL * split.scale:
            report.contained = False
            report.slack = max(report.slack, mismatch)
    return report


def bound_PC(split, E, angle, spectrum=None):
    """Interval of every eigenvalue of ``P_C A``; all of them must be positive."""
    _require_angle(angle)
    w = bound_widths(split, E, angle)
    lo = min(1.0 + float(split.lam[0]), float(split.lam_perp[0])) - w["eps_C"]
    hi = max(1.0 + float(split.lam[-1]), float(split.lam_perp[-1])) + w["eps_C"]
    report = BoundReport("coarse-correction-perturbed-space", lo, hi, w["eps_C"], details=w)
    values, max_imag, _ = _as_spectrum(spectrum)
    if values is None:
        return report
    report.spectrum = values
    report.max_imag = max_imag
    _judge(report, values, split.scale)
    positive = bool(values.size == 0 or values[0] > 0.0)
    report.details["positive"] = positive
    if not positive:
        report.contained = False
        report.slack = max(report.slack, float(-values[0]))
    return report


def _inexact(bound, lo, hi, width, split, spectrum, details):
    report = BoundReport(bound, lo, hi, width, details=details)
    values, max_imag, is_real = _as_spectrum(spectrum)
    if values is None:
        return report
    report.spectrum = values
    report.max_imag = max_imag
    if not is_real:
        report.hypothesis = "failed"
        dl_warnings.warn("%s: spectrum is not real (max imag %.3e)" % (bound, max_imag))
    return _judge(report, values, split.scale)


def bound_inexact_D(split, rho, spectrum=None):
    """``-xi_D <= lambda(P_D A) <= lambda_max(Λ_⊥) + xi_D`` with
    ``rho = ||E H^{-1} - I||_2``."""
    xi = xi_D(rho, split.lam_norm)
    return _inexact(
        "deflation-inexact-solve",
        -xi,
        float(split.lam_perp[-1]) + xi,
        xi,
        split,
        spectrum,
        {"rho": rho, "xi_D": xi},
    )


def bound_inexact_C(split, rho, spectrum=None):
    """``rho = ||H^{-1} E - I||_2``."""
    xi = xi_C(rho)
    lo = min(1.0 + float(split.lam[0]), float(split.lam_perp[0])) - xi
    hi = max(1.0 + float(split.lam[-1]), float(split.lam_perp[-1])) + xi
    return _inexact(
        "coarse-correction-inexact-solve", lo, hi, xi, split, spectrum, {"rho": rho, "xi_C": xi}
    )


def bound_inexact_A(split, rho1, rho2, spectrum=None):
    """``rho1 = ||E H^{-1} - I||_2``, ``rho2 = ||H^{-1} E - I||_2``."""
    xi = xi_A(rho1, rho2, split.lam_norm)
    lo = min(1.0, float(split.lam_perp[0])) - xi
    hi = max(1.0, float(split.lam_perp[-1])) + xi
    return _inexact(
        "adapted-inexact-solve",
        lo,
        hi,
        xi,
        split,
        spectrum,
        {"rho1": rho1, "rho2": rho2, "xi_A": xi},
    )


def exact_space_spectrum(split, kind):
    """Spectrum of ``P A`` for the exact eigenvector space and exact E."""
    ones = np.ones(split.r)
    head = {"PD": 0.0 * ones, "PC": 1.0 + split.lam, "PA": ones}[kind]
    return np.sort(np.concatenate([head, split.lam_perp]))


# ---------------------------------------------------------------------------
# dense spectra


def materialize(op, cap=None):
    """Dense matrix of an operator, one block of unit vectors at a time."""
    Bop = as_operator(op)
    n = Bop.shape[0]
    cap = config.DENSE_CAP if cap is None else cap
    if n > cap:
        raise DenseCapExceededError(n, cap)
    return np.asarray(Bop.matmat(np.eye(n)))


def spectrum_of(op, cap=None, sym_tol=SPECTRUM_SYMMETRY_TOL, imag_tol=REALNESS_TOL):
    """Ascending eigenvalues of an operator small enough to form densely.

    Uses the symmetric eigensolver when the dense matrix is symmetric to
    ``sym_tol`` relative, the general one otherwise.
    """
    M = materialize(op, cap)
    scale = float(np.max(np.abs(M))) if M.size else 0.0
    asym = float(np.max(np.abs(M - M.T))) if M.size else 0.0
    if asym <= sym_tol * max(scale, np.finfo(float).tiny):
        lam = sym_eig(M, tol=np.inf).eigenvalues
        return RealSpectrum(lam, np.zeros_like(lam), 0.0, True)
    return general_eig_real(M, imag_tol)


def commutation_gap(A, p, kind, probes, A_norm=None):
    """``max ||A P x - P A x|| / (||A|| ||x||)`` over the probe vectors."""
    if A_norm is None:
        A_norm = norm2(materialize(A))
    gap = 0.0
    for x in np.atleast_2d(probes):
        d = apply_right(kind, p, A, x) - apply_left(kind, p, A, x)
        gap = max(gap, np.linalg.norm(d) / (A_norm * np.linalg.norm(x)))
    return float(gap)


def right_spectrum_check(A, p, kind="PC", cap=None):
    """Extreme eigenvalues of ``P A`` next to those of ``A P``."""
    left = spectrum_of(PreconditionedOperator(A, kind, p, side="left"), cap)
    right = spectrum_of(PreconditionedOperator(A, kind, p, side="right"), cap)
    return {
        "left_min": float(left.values[0]),
        "left_max": float(left.values[-1]),
        "right_min": float(right.values[0]),
        "right_max": float(right.values[-1]),
        "max_gap": float(
            max(abs(left.values[0] - right.values[0]), abs(left.values[-1] - right.values[-1]))
        ),
    }


# ---------------------------------------------------------------------------
# randomized trials


def random_spd(n, r, rng, small=(1e-3, 1e-1), large=(1.0, 10.0)):
    """SPD matrix with ``r`` eigenvalues in ``small`` and the rest in ``large``.

    Returns:
        (A, SpectralSplit)
    """
    lam = np.sort(rng.uniform(*small, size=r))
    lam_perp = np.sort(rng.uniform(*large, size=n - r))
    Q = scipy.stats.ortho_group.rvs(n, random_state=rng) if n > 1 else np.ones((1, 1))
    V, V_perp = Q[:, :r], Q[:, r:]
    A = (Q * np.concatenate([lam, lam_perp])) @ Q.T
    A = 0.5 * (A + A.T)
    return A, SpectralSplit(lam, lam_perp, V, V_perp)


def basis_at_angle(split, sin, rng):
    """Orthonormal Z whose principal angles with ``span(V)`` all equal
    ``arcsin(sin)``."""
    r = split.r
    m = split.V_perp.shape[1]
    if r > m:
        raise ValueError("need n >= 2r to tilt every direction")
    W = scipy.stats.ortho_group.rvs(m, random_state=rng)[:, :r] if m > 1 else np.ones((1, 1))
    C = scipy.stats.ortho_group.rvs(r, random_state=rng) if r > 1 else np.ones((1, 1))
    cos = np.sqrt(max(0.0, 1.0 - sin**2))
    return (split.V * cos + (split.V_perp @ W) * sin) @ C


def perturbed_space_trial(kind, n, r, sin, rng):
    """One randomized check of a perturbed-space bound for ``kind``."""
    from deflation_lab.coarse import subspace_angle

    A, split = random_spd(n, r, rng)
    Z = basis_at_angle(split, sin, rng)
    angle = subspace_angle(Z, split.V, rng=rng)
    p = build_projection(A, Z)
    spec = spectrum_of(PreconditionedOperator(A, kind, p))
    if kind == "PD":
        return bound_PD(split, p.E, angle, spec)
    if kind == "PC":
        return bound_PC(split, p.E, angle, spec)
    spec_PD = spectrum_of(PreconditionedOperator(A, "PD", p))
    return bound_PA(split, p.E, angle, spec, spectrum_PD=spec_PD)


def inexact_solve_trial(kind, n, r, scale, rng):
    """One randomized check of an inexact-solve bound: ``Z = V`` and
    ``H = E + scale * R`` with R uniform on [0, 1)."""
    A, split = random_spd(n, r, rng)
    E = split.V.T @ A @ split.V
    H = E + scale * rng.random((r, r))
    p = build_projection(A, split.V, solver="perturbed", H=H)
    spec = spectrum_of(PreconditionedOperator(A, kind, p))
    if kind == "PD":
        return bound_inexact_D(split, p.rho_right(), spec)
    if kind == "PC":
        return bound_inexact_C(split, p.rho_left(), spec)
    return bound_inexact_A(split, p.rho_right(), p.rho_left(), spec)
