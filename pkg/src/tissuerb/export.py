"""Matrix Market and CSV writers used by the CLI."""
import csv
import json

import numpy as np
import scipy.io
import scipy.sparse as sp


def write_mtx(path, matrix, comment=""):
    """Dense or sparse matrix to Matrix Market (coordinate format, zeros dropped)."""
    m = sp.coo_matrix(np.atleast_2d(np.asarray(matrix, dtype=float)))
    m.eliminate_zeros()
    scipy.io.mmwrite(str(path), m, comment=comment, precision=17)


def read_mtx(path):
    return scipy.io.mmread(str(path)).toarray()


def write_trajectory_csv(path, traj, rows=None):
    """One row per time node: ``t`` followed by the state (or ``rows``) entries."""
    X = traj.X if rows is None else rows
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t"] + [f"x{i}" for i in range(X.shape[0])])
        for t, col in zip(traj.grid.times, X.T):
            w.writerow([repr(float(t))] + [repr(float(v)) for v in col])


def write_manifest(path, **entries):
    with open(path, "w") as fh:
        json.dump(entries, fh, indent=2, sort_keys=True, default=_jsonable)
        fh.write("\n")


def _jsonable(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.generic):
        return obj.item()
    raise TypeError(f"cannot serialise {type(obj).__name__}")
