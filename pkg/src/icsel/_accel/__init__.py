"""Hot-kernel backend selection.

Imports the compiled Cython kernels when the extension built, otherwise the
numpy/pure-Python fallback. Set ICSEL_PURE_PYTHON=1 to force the fallback
(used by the backend-parity tests and the benchmark).
"""

from __future__ import annotations

import os

import numpy as np

if os.environ.get("ICSEL_PURE_PYTHON", "") not in ("", "0"):
    from icsel._accel import pure as _backend
else:
    try:
        from icsel._accel import _fast as _backend  # type: ignore[no-redef]
    except ImportError:
        from icsel._accel import pure as _backend  # type: ignore[no-redef]

BACKEND: str = _backend.NAME


def topm_neighbors(sim: np.ndarray, m: int) -> tuple[np.ndarray, np.ndarray]:
    sim = np.ascontiguousarray(sim, dtype=np.float64)
    return _backend.topm_neighbors(sim, int(m))


def greedy_cover(
    indptr: np.ndarray,
    members: np.ndarray,
    n_universe: int,
    budget: int,
    uncertainty: np.ndarray | None,
) -> tuple[list[int], np.ndarray, list[int]]:
    indptr = np.ascontiguousarray(indptr, dtype=np.int64)
    members = np.ascontiguousarray(members, dtype=np.int32)
    if uncertainty is None:
        uncertainty = np.zeros(n_universe, dtype=np.float64)
    else:
        uncertainty = np.ascontiguousarray(uncertainty, dtype=np.float64)
    return _backend.greedy_cover(indptr, members, int(n_universe), int(budget), uncertainty)
