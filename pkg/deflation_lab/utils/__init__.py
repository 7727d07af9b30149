import functools
import os
import subprocess

import numpy as np


@functools.lru_cache(maxsize=None)
def version_string():
    """git-describe style version of the installed package.

    Falls back to the release number when the package does not live in a git
    checkout (installed wheel, sdist).
    """
    from deflation_lab import __version__

    here = os.path.dirname(os.path.abspath(__file__))
    try:
        out = subprocess.run(
            ["git", "describe", "--tags", "--always", "--dirty"],
            cwd=here,
            check=True,
            stdout=subprocess.PIPE,
            stderr=subprocess.DEVNULL,
            text=True,
        )
    except (OSError, subprocess.CalledProcessError):
        return __version__
    described = out.stdout.strip()
    return "%s+g%s" % (__version__, described) if described else __version__


def make_rng(seed):
    """64-bit PCG generator; uniform draws on [0, 1) like Matlab's rand."""
    return np.random.default_rng(seed)


def spawn_rngs(seed, count):
    """Independent generator streams, one per trial or experiment cell."""
    children = np.random.SeedSequence(seed).spawn(count)
    return [np.random.default_rng(child) for child in children]


def as_vector(x, n=None, name="x"):
    from deflation_lab.errors import DimensionMismatchError

    x = np.asarray(x, dtype=float).reshape(-1)
    if n is not None and x.shape[0] != n:
        raise DimensionMismatchError(
            "%s has length %d, expected %d" % (name, x.shape[0], n)
        )
    return x
