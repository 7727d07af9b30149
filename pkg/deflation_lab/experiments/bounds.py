"""Randomized containment trials for every spectral bound."""

import logging

import numpy as np

from deflation_lab.analysis import (
    BoundReport,
    basis_at_angle,
    bound_PD,
    inexact_solve_trial,
    perturbed_space_trial,
    random_spd,
)
from deflation_lab.coarse import subspace_angle
from deflation_lab.errors import HypothesisViolatedError
from deflation_lab.experiments.base import Experiment, ExperimentSummary
from deflation_lab.precond import build_projection
from deflation_lab.xio import write_bound_reports, write_table

logger = logging.getLogger(__name__)

PERTURBED_SPACE = {
    "deflation-perturbed-space": "PD",
    "adapted-perturbed-space": "PA",
    "coarse-correction-perturbed-space": "PC",
}
INEXACT_SOLVE = {
    "deflation-inexact-solve": "PD",
    "adapted-inexact-solve": "PA",
    "coarse-correction-inexact-solve": "PC",
}


def orthogonal_trial(n, r, rng):
    """Coarse space orthogonal to the eigenvectors: the bound must refuse it."""
    A, split = random_spd(n, r, rng)
    Z = basis_at_angle(split, 1.0, rng)
    angle = subspace_angle(Z, split.V, rng=rng)
    try:
        return bound_PD(split, build_projection(A, Z).E, angle)
    except HypothesisViolatedError as exc:
        report = BoundReport("deflation-perturbed-space", -np.inf, np.inf, np.inf)
        report.hypothesis = "violated"
        report.details["reason"] = str(exc)
        return report


class BoundSuite(Experiment):
    name = "bound-suite"

    def build_cells(self):
        n, r, trials = int(self.cfg["n"]), int(self.cfg["r"]), int(self.cfg["trials"])
        bounds = list(self.cfg["bounds"])
        rngs = self.rngs(len(bounds) * trials + 1)
        k = 0
        for bound in bounds:
            for t in range(trials):
                if bound in PERTURBED_SPACE:
                    args = (PERTURBED_SPACE[bound], n, r, float(self.cfg["sin"]), rngs[k])
                    self.add_cell((bound, t), perturbed_space_trial, *args)
                else:
                    args = (INEXACT_SOLVE[bound], n, r, float(self.cfg["rho_scale"]), rngs[k])
                    self.add_cell((bound, t), inexact_solve_trial, *args)
                k += 1
        if self.cfg.get("orthogonal_trial", False):
            self.add_cell(("orthogonal", 0), orthogonal_trial, n, r, rngs[k])

    def finalize(self):
        rows = []
        reports = {}
        for bound, t in self.cells:
            reports.setdefault(bound, []).append(self.results[(bound, t)])
        violations = 0
        for bound, batch in reports.items():
            bad = sum(1 for rep in batch if rep.violation)
            violations += bad
            rows.append(
                {
                    "bound": bound,
                    "trials": len(batch),
                    "contained": sum(1 for rep in batch if rep.contained),
                    "violations": bad,
                    "hypothesis_failed": sum(1 for rep in batch if rep.hypothesis == "failed"),
                    "hypothesis_violated": sum(1 for rep in batch if rep.hypothesis == "violated"),
                    "max_slack": max(rep.slack for rep in batch),
                }
            )
            self.written(
                write_bound_reports(self.path("reports_%s.json" % bound), batch, self.seed)
            )
        self.written(write_table(self.path("summary.csv"), rows, self.seed))
        if violations:
            logger.error("%d trials violated their bound", violations)
        return ExperimentSummary(self.name, rows, self.files, 1 if violations else 0)
