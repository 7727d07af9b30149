"""Readers and writers for matrices, coarse spaces, decompositions, spectra,
residual histories, tables and bound reports.

Tables are written with pandas so that every emitted row can carry the seed
and the version string of the run that produced it. Floats go out with 17
significant digits; reruns with the same seed produce identical files.
"""

import json
import logging
import os

import numpy as np
import pandas as pd
import scipy.io
import scipy.sparse

from deflation_lab.coarse import CoarseSpace
from deflation_lab.linalg import as_csr
from deflation_lab.pde import Decomposition
from deflation_lab.utils import version_string

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.17g"


def _ensure_dir(path):
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)


def _jsonable(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, tuple):
        return list(obj)
    raise TypeError("cannot serialize %r" % type(obj))


def write_json(path, data):
    _ensure_dir(path)
    with open(path, "w") as f:
        json.dump(data, f, indent=2, sort_keys=True, default=_jsonable)
        f.write("\n")
    logger.debug("wrote %s", path)


def read_json(path):
    with open(path, "r") as f:
        return json.load(f)


def stamp(frame, seed=None):
    """Add the ``seed`` and ``version`` columns to a table."""
    frame = frame.copy()
    frame["seed"] = seed if seed is not None else ""
    frame["version"] = version_string()
    return frame


def write_table(path, rows, seed=None, columns=None):
    """Write a list of dict rows as CSV."""
    frame = pd.DataFrame(list(rows), columns=columns)
    _ensure_dir(path)
    stamp(frame, seed).to_csv(path, index=False, float_format=FLOAT_FORMAT)
    logger.debug("wrote %s (%d rows)", path, len(frame))
    return path


def read_table(path):
    return pd.read_csv(path, float_precision="round_trip")


# ---------------------------------------------------------------------------
# matrices


def write_matrix_market(path, A, comment=""):
    _ensure_dir(path)
    if scipy.sparse.issparse(A):
        A = scipy.sparse.coo_matrix(A)
    scipy.io.mmwrite(path, A, comment=comment, precision=17)
    return path


def read_matrix_market(path):
    """Matrix Market file as CSR (coordinate format) or ndarray (array format)."""
    M = scipy.io.mmread(path)
    if scipy.sparse.issparse(M):
        return as_csr(M)
    return np.asarray(M, dtype=float)


def write_dense_csv(path, M):
    """Dense matrix as row-major CSV. The header line holds the shape,
    ``rows,cols``; every following line is one matrix row."""
    M = np.asarray(M, dtype=float)
    if M.ndim == 1:
        M = M.reshape(-1, 1)
    _ensure_dir(path)
    with open(path, "w") as f:
        f.write("%d,%d\n" % M.shape)
        pd.DataFrame(M).to_csv(f, header=False, index=False, float_format=FLOAT_FORMAT)
    return path


def read_dense_csv(path):
    with open(path, "r") as f:
        header = f.readline().strip()
    try:
        rows, cols = (int(v) for v in header.split(","))
    except ValueError:
        raise ValueError("%s: expected a \"rows,cols\" header, got %r" % (path, header)) from None
    if rows == 0 or cols == 0:
        return np.zeros((rows, cols))
    M = pd.read_csv(path, header=None, skiprows=1, float_precision="round_trip").to_numpy(dtype=float)
    if M.shape != (rows, cols):
        raise ValueError("%s: header says %dx%d, data is %dx%d" % ((path, rows, cols) + M.shape))
    return M


# ---------------------------------------------------------------------------
# coarse spaces and decompositions


def _sidecar(path):
    return os.path.splitext(path)[0] + ".json"


def write_coarse_space(path, space, seed=None):
    """Dense CSV of Z plus a JSON sidecar holding its provenance."""
    write_dense_csv(path, space.dense())
    meta = {
        "n": space.n,
        "r": space.r,
        "provenance": space.provenance,
        "blocks": [b.tolist() for b in space.blocks] if space.blocks is not None else None,
        "seed": seed,
        "version": version_string(),
    }
    write_json(_sidecar(path), meta)
    return path


def read_coarse_space(path):
    Z = read_dense_csv(path)
    meta = {}
    side = _sidecar(path)
    if os.path.isfile(side):
        meta = read_json(side)
    provenance = dict(meta.get("provenance") or {"kind": "loaded"})
    blocks = meta.get("blocks")
    if blocks is not None:
        blocks = [np.asarray(b, dtype=np.int64) for b in blocks]
    return CoarseSpace(Z, provenance, blocks)


def write_decomposition(path, dec, seed=None):
    data = dec.to_dict()
    data["seed"] = seed
    data["version"] = version_string()
    write_json(path, data)
    return path


def read_decomposition(path):
    return Decomposition.from_dict(read_json(path))


# ---------------------------------------------------------------------------
# spectra, histories, reports


def write_spectrum(path, spectrum, seed=None, label=None):
    """Spectrum CSV with columns index, eigenvalue, imag."""
    values = getattr(spectrum, "values", spectrum)
    imag = getattr(spectrum, "imag", None)
    values = np.asarray(values, dtype=float)
    imag = np.zeros_like(values) if imag is None else np.asarray(imag, dtype=float)
    frame = pd.DataFrame(
        {"index": np.arange(values.size), "eigenvalue": values, "imag": imag}
    )
    if label is not None:
        frame.insert(0, "operator", label)
    _ensure_dir(path)
    stamp(frame, seed).to_csv(path, index=False, float_format=FLOAT_FORMAT)
    return path


def read_spectrum(path):
    frame = pd.read_csv(path, float_precision="round_trip")
    return frame["eigenvalue"].to_numpy(dtype=float), frame["imag"].to_numpy(dtype=float)


def write_history(path, history, seed=None, label=None):
    """Residual history CSV with columns iteration, relative_residual."""
    history = np.asarray(history, dtype=float)
    frame = pd.DataFrame(
        {"iteration": np.arange(history.size), "relative_residual": history}
    )
    if label is not None:
        frame.insert(0, "method", label)
    _ensure_dir(path)
    stamp(frame, seed).to_csv(path, index=False, float_format=FLOAT_FORMAT)
    return path


def read_history(path):
    return pd.read_csv(path, float_precision="round_trip")["relative_residual"].to_numpy(dtype=float)


def write_bound_reports(path, reports, seed=None, extra=None):
    data = {
        "seed": seed,
        "version": version_string(),
        "reports": [r.to_dict() if hasattr(r, "to_dict") else r for r in reports],
    }
    if extra:
        data.update(extra)
    write_json(path, data)
    return path
