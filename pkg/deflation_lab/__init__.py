__version__ = "0.1.0"

from deflation_lab.precond import (
    PreconditionedOperator,
    ProjectionOperator,
    apply_PA,
    apply_PC,
    apply_PD,
    build_projection,
    build_RAS,
)
from deflation_lab.krylov import GmresConfig, GmresResult, arnoldi, extract_ritz, gmres
from deflation_lab.coarse import CoarseSpace, exact_coarse_space, perturb_space, ritz_split, subspace_angle
