# deflation_lab/utils/warnings.py
import warnings


class NumericalWarning(UserWarning):
    """A numerical condition worth reporting that does not invalidate the result."""


def warn(msg, category=NumericalWarning, stacklevel=3):
    warnings.warn(msg, category, stacklevel=stacklevel)


def apply_custom_format():
    warnings.formatwarning = lambda msg, cat, fname, lineno, *_: (
        f"\n{cat.__name__} in {fname}:{lineno}\n-> {msg}\n"
    )
