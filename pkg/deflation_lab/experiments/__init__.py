from deflation_lab.experiments.bounds import BoundSuite
from deflation_lab.experiments.bvp import BVPExperiment, ILUExperiment
from deflation_lab.experiments.diagonal import (
    AngleTable,
    PerturbedProjectionTable,
    PerturbedSpaceTable,
    SpectraDump,
)

EXPERIMENTS = {
    cls.name: cls
    for cls in (
        AngleTable,
        PerturbedSpaceTable,
        PerturbedProjectionTable,
        SpectraDump,
        BVPExperiment,
        ILUExperiment,
        BoundSuite,
    )
}


def get_experiment(name):
    try:
        return EXPERIMENTS[name]
    except KeyError:
        raise ValueError(
            "unknown experiment %r; available: %s" % (name, ", ".join(sorted(EXPERIMENTS)))
        ) from None


def _run_family(prefix, cfg, **kwargs):
    name = cfg["experiment"]
    if not name.startswith(prefix):
        raise ValueError("%r is not a %s* experiment" % (name, prefix))
    return get_experiment(name)(cfg, **kwargs).run()


def run_diag_experiments(cfg, **kwargs):
    """Run one of the diagonal-matrix experiments (angles, iteration tables, spectra)."""
    return _run_family("diag-", cfg, **kwargs)


def run_bvp_experiments(cfg, **kwargs):
    """Run a two-level Schwarz experiment on the diffusion problem."""
    return _run_family("bvp-", cfg, **kwargs)


def run_bound_suite(cfg, **kwargs):
    """Run the randomized containment trials; ``exit_code`` is 1 on any violation."""
    return _run_family("bound-suite", cfg, **kwargs)
