"""Drivers for the heterogeneous diffusion problem with overlapping Schwarz.

Every (kappa, nparts) cell runs three phases on the RAS-preconditioned
operator ``B = M^{-1} A``:

1. GMRES with RAS only, keeping the Arnoldi basis;
2. Ritz pairs of B below the threshold and their largest residual;
3. the Ritz vectors split across subdomains as coarse space, and GMRES on
   ``P B`` for each projection preconditioner and each way of applying
   ``E^{-1}`` (exact LU, or ILU(0) of E on the blocks of coupled subdomains).

Every residual is relative to ``||M^{-1} b||``, the right-hand side of the
one-level system.
"""

import logging
import math

import numpy as np

from deflation_lab.coarse import res_max, ritz_split
from deflation_lab.experiments.base import Experiment, ExperimentSummary
from deflation_lab.krylov import GmresConfig, extract_ritz, gmres
from deflation_lab.pde import Grid2D, KappaField, assemble, decompose, layout_shape
from deflation_lab.precond import PreconditionedOperator, build_projection, build_RAS
from deflation_lab.xio import write_decomposition, write_history, write_table

logger = logging.getLogger(__name__)


class TwoLevelRun:
    """Outcome of one (kappa, nparts) cell."""

    def __init__(self, kappa, nparts):
        self.kappa = kappa
        self.nparts = nparts
        self.decomposition = None
        self.one_level = None
        self.pairs = None
        self.space = None
        self.runs = {}
        self.rho = {}


class BVPExperiment(Experiment):
    name = "bvp-convergence"

    def __init__(self, cfg, **kwargs):
        super().__init__(cfg, **kwargs)
        self.grid = Grid2D.square(int(cfg["grid"]))
        self.gmres_cfg = GmresConfig(
            tol=float(cfg.get("tol", 1e-10)), max_iterations=int(cfg.get("max_iterations", 300))
        )
        self.problems = {}

    def build_cells(self):
        for kappa in self.cfg["kappa"]:
            self.problems[kappa] = assemble(self.grid, KappaField.from_name(kappa))
            for nparts in self.cfg["nparts"]:
                self.add_cell((kappa, int(nparts)), self.run_cell, kappa, int(nparts))

    def run_cell(self, kappa, nparts):
        A, b = self.problems[kappa]
        out = TwoLevelRun(kappa, nparts)
        shape = layout_shape(self.cfg.get("layout", "square"), nparts)
        dec = decompose(self.grid, A, nparts, level=int(self.cfg.get("overlap", 2)), shape=shape)
        out.decomposition = dec
        # subdomain factorizations stay serial inside a cell; cells run in parallel
        ras = build_RAS(A, dec, max_workers=1)
        B = PreconditionedOperator(A, "RAS", ras=ras)
        rhs = B.rhs(b)
        ref = float(np.linalg.norm(rhs))

        out.one_level = gmres(B, rhs, cfg=self.gmres_cfg, keep_basis=True, ref_norm=ref)
        out.pairs = extract_ritz(out.one_level.basis, B, float(self.cfg["ritz_threshold"]))
        out.one_level.basis = None
        if not out.pairs:
            logger.warning("%s/%d: no Ritz values below the threshold", kappa, nparts)
            return out

        out.space = ritz_split(out.pairs, dec)
        coupling = dec.coupling(A)
        for solver in self.cfg.get("solvers", ["lu"]):
            p = build_projection(
                B,
                out.space.Z,
                solver=solver,
                blocks=out.space.blocks,
                coupling=coupling,
                symmetric=False,
            )
            if solver != "lu":
                out.rho[solver] = (p.rho_right(), p.rho_left())
            for kind in self.cfg["precond"]:
                op = PreconditionedOperator(B, kind, p)
                out.runs[(kind, solver)] = gmres(op, op.rhs(rhs), cfg=self.gmres_cfg, ref_norm=ref)
        return out

    def finalize(self):
        rows = []
        ritz_rows = []
        for kappa, nparts in self.cells:
            out = self.results[(kappa, nparts)]
            tag = "%s_%d" % (kappa, nparts)
            self.written(
                write_decomposition(self.path("decomposition_%s.json" % tag), out.decomposition, self.seed)
            )
            pairs = out.pairs or []
            ritz_rows.append(
                {
                    "kappa": kappa,
                    "nparts": nparts,
                    "ritz_pairs": len(pairs),
                    "excluded_complex": getattr(out.pairs, "excluded_complex", 0),
                    "res_max": res_max(pairs) if pairs else math.nan,
                    "coarse_columns": out.space.r if out.space is not None else 0,
                    "dropped": out.space.provenance["dropped"] if out.space is not None else 0,
                }
            )
            runs = [("RAS", "-", out.one_level)] + [
                (kind, solver, res) for (kind, solver), res in out.runs.items()
            ]
            for kind, solver, res in runs:
                rho_right, rho_left = out.rho.get(solver, (math.nan, math.nan))
                rows.append(
                    {
                        "kappa": kappa,
                        "nparts": nparts,
                        "precond": kind,
                        "solver": solver,
                        "iterations": res.iterations,
                        "converged": res.converged,
                        "final_residual": res.final_residual,
                        "rho_right": rho_right,
                        "rho_left": rho_left,
                    }
                )
                label = kind if solver == "-" else "%s-%s" % (kind, solver)
                name = "history_%s_%s.csv" % (tag, label)
                self.written(write_history(self.path(name), res.history, self.seed, label))
        self.written(write_table(self.path("ritz.csv"), ritz_rows, self.seed))
        self.written(write_table(self.path("iterations.csv"), rows, self.seed))
        return ExperimentSummary(self.name, rows, self.files)


class ILUExperiment(BVPExperiment):
    """Same cells, comparing exact LU of E with ILU(0) on its block pattern."""

    name = "bvp-ilu"
