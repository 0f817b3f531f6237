"""Input validation helpers used at public API boundaries."""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp


def check_user_range(user_range, n_users: int) -> tuple[int, int]:
    """Validate a half-open ``(start, stop)`` interval of user indices."""
    start, stop = user_range
    start, stop = int(start), int(stop)
    if not (0 <= start <= stop <= n_users):
        raise ValueError(
            f"user range [{start}, {stop}) outside [0, {n_users})"
        )
    return start, stop


def check_chunk_size(chunk_size) -> int:
    chunk_size = int(chunk_size)
    if chunk_size < 1:
        raise ValueError(f"chunk_size must be >= 1, got {chunk_size}")
    return chunk_size


def check_binary_matrix(matrix, name: str = "matrix") -> None:
    """Assert a sparse interaction matrix is canonical binary CSR."""
    if not sp.issparse(matrix):
        raise TypeError(f"{name} must be a scipy sparse matrix")
    if matrix.nnz and (matrix.data.min() != 1 or matrix.data.max() != 1):
        raise ValueError(f"{name} must be binary (all stored entries 1)")


def check_fitted(obj, attributes: tuple[str, ...]) -> None:
    """Raise if any of the given fitted attributes is missing."""
    missing = [a for a in attributes if getattr(obj, a, None) is None]
    if missing:
        raise RuntimeError(
            f"{type(obj).__name__} is not fitted (missing {', '.join(missing)}); "
            "call fit() first"
        )


def check_mode(mode: str) -> str:
    if mode not in ("raw", "zscore"):
        raise ValueError(f"mode must be 'raw' or 'zscore', got {mode!r}")
    return mode


def as_int_array(values, name: str = "values") -> np.ndarray:
    arr = np.asarray(values)
    if arr.dtype.kind not in "iu":
        raise TypeError(f"{name} must be an integer array, got {arr.dtype}")
    return arr
