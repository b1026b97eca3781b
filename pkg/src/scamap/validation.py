"""Input checks shared by the estimator wrappers."""
from __future__ import annotations

import numpy as np
from sklearn.utils.validation import check_array, check_consistent_length

from .netlist import Design, parse_netlist


def check_traces(X, plaintexts=None, min_traces: int = 2):
    """Return (traces as a 2-D float array, plaintexts as uint64 or None)."""
    X = check_array(X, dtype=np.float64, ensure_2d=False, ensure_min_samples=min_traces)
    if X.ndim == 1:
        X = X[:, None]
    if plaintexts is None:
        return X, None
    pts = np.asarray(plaintexts)
    if pts.ndim != 1:
        raise ValueError("plaintexts must be one word per trace")
    if pts.dtype.kind not in "ui":
        raise ValueError("plaintexts must be integer words")
    if pts.dtype.kind == "i" and np.any(pts < 0):
        raise ValueError("plaintexts must be non-negative")
    check_consistent_length(X, pts)
    return X, pts.astype(np.uint64)


def check_design(X, library=None) -> Design:
    if isinstance(X, Design):
        return X
    if isinstance(X, str):
        return parse_netlist(X, library)
    raise TypeError(f"expected a Design or netlist text, got {type(X).__name__}")


def check_weights(alpha, beta, gamma):
    from .assignment import CostWeights

    return CostWeights(float(alpha), float(beta), float(gamma))
