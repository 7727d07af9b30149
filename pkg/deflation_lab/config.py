# deflation_lab/config.py

import os

# Global verbosity flag for error handling across the package
VERBOSE_ERRORS = os.getenv("DEFLATION_LAB_VERBOSE_ERRORS", "").lower() in ("1", "true", "yes")


def _int_env(name, default):
    value = os.getenv(name, "")
    try:
        return max(1, int(value))
    except ValueError:
        return default


# Upper bound on concurrently executed experiment cells
THREADS = _int_env("DEFLATION_LAB_THREADS", os.cpu_count() or 1)

# Largest operator order that analysis.spectrum_of materializes densely
DENSE_CAP = _int_env("DEFLATION_LAB_DENSE_CAP", 2500)
