"""Drivers for the diagonal test matrix: subspace angles of perturbed coarse
spaces, GMRES counts under a perturbed coarse space, GMRES counts under a
perturbed projection matrix, and dense spectra of the preconditioned
operators."""

import logging

import numpy as np
import scipy.sparse

from deflation_lab.analysis import spectrum_of
from deflation_lab.coarse import (
    exact_coarse_space,
    perturb_space,
    rayleigh_ritz,
    res_max,
    subspace_angle,
)
from deflation_lab.experiments.base import Experiment, ExperimentSummary
from deflation_lab.krylov import GmresConfig, gmres
from deflation_lab.precond import PreconditionedOperator, build_projection
from deflation_lab.xio import write_history, write_spectrum, write_table

logger = logging.getLogger(__name__)

NEAR_TOL = 1e-3


class DiagonalTestMatrix:
    """Order 2000: 1e-7, ..., 1e-1, then 1, then 10.0, 10.1, ..., 209.1.

    The seven entries below 1 are the eigenvalues deflated by the coarse
    space; the right-hand side is all ones.
    """

    r = 7

    def __init__(self):
        small = 10.0 ** np.arange(-7, 0)
        large = np.round(10.0 + 0.1 * np.arange(1992), 1)
        self.entries = np.concatenate([small, [1.0], large])
        self.n = self.entries.size

    def matrix(self):
        return scipy.sparse.diags(self.entries, format="csr")

    def dense(self):
        return np.diag(self.entries)

    def rhs(self):
        return np.ones(self.n)

    def exact_space(self, r=None):
        return exact_coarse_space(self.dense(), r or self.r)


class DiagonalExperiment(Experiment):
    """Shared setup: the matrix, its exact coarse space and GMRES settings."""

    def __init__(self, cfg, **kwargs):
        super().__init__(cfg, **kwargs)
        self.problem = DiagonalTestMatrix()
        self.A = self.problem.matrix()
        self.b = self.problem.rhs()
        self.r = int(cfg.get("r", DiagonalTestMatrix.r))
        self.V = self.problem.exact_space(self.r)
        self.gmres_cfg = GmresConfig(
            tol=float(cfg.get("tol", 1e-12)), max_iterations=int(cfg.get("max_iterations", 300))
        )

    def solve(self, kind, p):
        """GMRES on ``P A x = P b``; residuals are relative to ``||b||``."""
        op = PreconditionedOperator(self.A, kind, p)
        return gmres(op, op.rhs(self.b), cfg=self.gmres_cfg, ref_norm=np.linalg.norm(self.b))

    def perturbed_spaces(self, key="eps"):
        """One perturbed space per scale, each from its own generator."""
        scales = [float(e) for e in self.cfg[key]]
        return {
            eps: perturb_space(self.V, eps, rng=rng, seed=self.seed)
            for eps, rng in zip(scales, self.rngs(len(scales)))
        }

    def perturbed_projections(self, key="h_eps"):
        """``H = E + R / h_eps`` on the exact space, R uniform on [0, 1)."""
        scales = [float(e) for e in self.cfg[key]]
        E = build_projection(self.A, self.V.Z).E
        out = {}
        for eps, rng in zip(scales, spawn_offset(self.seed, len(scales))):
            H = E + rng.random(E.shape) / eps
            out[eps] = build_projection(self.A, self.V.Z, solver="perturbed", H=H)
        return out


def spawn_offset(seed, count):
    """Generators for projection perturbations, independent of the ones used
    for coarse space perturbations under the same seed."""
    children = np.random.SeedSequence([seed, 1]).spawn(count)
    return [np.random.default_rng(c) for c in children]


class AngleTable(DiagonalExperiment):
    """Distance between the exact and the perturbed coarse space, and the
    largest residual of the Ritz pairs extracted from the perturbed space."""

    name = "diag-table1"

    def build_cells(self):
        for eps, space in self.perturbed_spaces().items():
            self.add_cell(eps, self.measure, space)

    def measure(self, space):
        angle = subspace_angle(space, self.V)
        pairs = rayleigh_ritz(self.A, space.Z)
        return {"sin": angle.sin, "cos": angle.cos, "res_max": res_max(pairs)}

    def finalize(self):
        rows = [dict(eps=eps, **self.results[eps]) for eps in self.cells]
        self.written(write_table(self.path("angles.csv"), rows, self.seed))
        return ExperimentSummary(self.name, rows, self.files)


class PerturbedSpaceTable(DiagonalExperiment):
    """GMRES iterations with P_D, P_C, P_A built on the exact space and on
    each perturbed space, plus the unpreconditioned run."""

    name = "diag-table2"

    def build_cells(self):
        self.add_cell(("none", "-"), self.run_one, "none", None)
        spaces = {"exact": self.V}
        spaces.update(self.perturbed_spaces())
        for key, space in spaces.items():
            p = build_projection(self.A, space.Z)
            for kind in self.cfg["precond"]:
                self.add_cell((kind, key), self.run_one, kind, p)

    def run_one(self, kind, p):
        return self.solve(kind, p)

    def finalize(self):
        rows = []
        for kind, key in self.cells:
            res = self.results[(kind, key)]
            rows.append(
                {
                    "space": key,
                    "precond": kind,
                    "iterations": res.iterations,
                    "converged": res.converged,
                    "final_residual": res.final_residual,
                }
            )
            name = "history_%s_%s.csv" % (kind, key)
            self.written(write_history(self.path(name), res.history, self.seed, kind))
        self.written(write_table(self.path("iterations.csv"), rows, self.seed))
        return ExperimentSummary(self.name, rows, self.files)


class PerturbedProjectionTable(DiagonalExperiment):
    """GMRES iterations on the exact space with ``E^{-1}`` replaced by
    ``H^{-1}``, and both rho-norms of each H."""

    name = "diag-table3"

    def build_cells(self):
        for eps, p in self.perturbed_projections().items():
            for kind in self.cfg["precond"]:
                self.add_cell((kind, eps), self.run_one, kind, p)

    def run_one(self, kind, p):
        return self.solve(kind, p), p.rho_right(), p.rho_left()

    def finalize(self):
        rows = []
        for kind, eps in self.cells:
            res, rho_right, rho_left = self.results[(kind, eps)]
            rows.append(
                {
                    "h_eps": eps,
                    "precond": kind,
                    "iterations": res.iterations,
                    "converged": res.converged,
                    "final_residual": res.final_residual,
                    "rho_right": rho_right,
                    "rho_left": rho_left,
                }
            )
            name = "history_%s_%g.csv" % (kind, eps)
            self.written(write_history(self.path(name), res.history, self.seed, kind))
        self.written(write_table(self.path("iterations.csv"), rows, self.seed))
        return ExperimentSummary(self.name, rows, self.files)


class SpectraDump(DiagonalExperiment):
    """Dense spectra of the preconditioned operators for the exact space,
    perturbed spaces and perturbed projection matrices."""

    name = "diag-spectra"

    def build_cells(self):
        cases = {"exact": build_projection(self.A, self.V.Z)}
        for eps, space in self.perturbed_spaces().items():
            cases["space_eps%g" % eps] = build_projection(self.A, space.Z)
        for eps, p in self.perturbed_projections().items():
            cases["projection_eps%g" % eps] = p
        for case, p in cases.items():
            for kind in self.cfg["precond"]:
                self.add_cell((kind, case), self.spectrum, kind, p)

    def spectrum(self, kind, p):
        return spectrum_of(PreconditionedOperator(self.A, kind, p))

    def finalize(self):
        rows = []
        for kind, case in self.cells:
            spec = self.results[(kind, case)]
            values = spec.values
            rows.append(
                {
                    "case": case,
                    "precond": kind,
                    "min": float(values[0]),
                    "max": float(values[-1]),
                    "max_imag": spec.max_imag,
                    "near_zero": int(np.sum(np.abs(values) < NEAR_TOL)),
                    "near_one": int(np.sum(np.abs(values - 1.0) < NEAR_TOL)),
                }
            )
            name = "spectrum_%s_%s.csv" % (kind, case)
            self.written(write_spectrum(self.path(name), spec, self.seed, kind))
        self.written(write_table(self.path("spectra_summary.csv"), rows, self.seed))
        return ExperimentSummary(self.name, rows, self.files)
