"""Exact walk counting over per-behavior bipartite matrices.

The number of walks from user u to item i realizing a behavior sequence
``b1, b2, ..., bl`` (odd l, revisits allowed) equals the (u, i) entry of
the alternating chain product ``E[b1] @ E[b2].T @ E[b3] @ ...``. Counting
is done per contiguous user chunk, left to right, so every intermediate
stays at (chunk x n_users) or (chunk x n_items).

A pure-Python depth-first enumerator provides an independent ground
truth for testing; it counts the same walks one at a time.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

import numpy as np
import scipy.sparse as sp

from .dataset import MultiBehaviorDataset
from .errors import CountOverflowError
from .patterns import BehaviorPattern, PatternSet
from .validation import check_chunk_size, check_user_range

DEFAULT_CHUNK_SIZE = 1024

# Next-product entries are bounded by current row sums (factors are binary),
# so guarding row sums at 2**62 keeps every int64 intermediate exact.
_SAFE_LIMIT = float(2**62)


def _max_row_sum(matrix: sp.csr_matrix) -> float:
    if matrix.nnz == 0:
        return 0.0
    starts = matrix.indptr[:-1][np.diff(matrix.indptr) > 0]
    sums = np.add.reduceat(matrix.data.astype(np.float64), starts)
    return float(sums.max())


def _guard_overflow(matrix, pattern: BehaviorPattern) -> None:
    if _max_row_sum(matrix) > _SAFE_LIMIT:
        raise CountOverflowError(
            f"walk counts for pattern {pattern.steps} exceed the 64-bit range"
        )


def _chain(train, pattern, first_rows) -> sp.csr_matrix:
    """Left-to-right chain product starting from a row slice of E[b1]."""
    result = first_rows
    for t, b in enumerate(pattern.steps[1:], start=2):
        _guard_overflow(result, pattern)
        factor = train.transposed(b) if t % 2 == 0 else train.matrix(b)
        result = result @ factor
    return result


def count_paths(
    train: MultiBehaviorDataset,
    pattern: BehaviorPattern,
    user_range: tuple[int, int],
) -> sp.csr_matrix:
    """Exact walk counts for one pattern over a contiguous user range.

    Returns a (range_size x n_items) sparse matrix of uint64 counts;
    entry (u, i) is the number of walks from user ``start + u`` to item
    ``i`` whose edge labels follow ``pattern.steps``.
    """
    start, stop = check_user_range(user_range, train.n_users)
    if max(pattern.steps) >= len(train.schema):
        raise ValueError(
            f"pattern step {max(pattern.steps)} outside schema of size "
            f"{len(train.schema)}"
        )
    first = train.matrix(pattern.steps[0])[start:stop]
    return _chain(train, pattern, first).astype(np.uint64)


@dataclass
class FeatureBlock:
    """Walk counts for every pattern over one contiguous user chunk."""

    user_range: tuple[int, int]
    patterns: PatternSet
    counts: list[sp.csr_matrix]

    @property
    def n_rows(self) -> int:
        return self.user_range[1] - self.user_range[0]


def _block_counts(train, patterns, rows, share_prefixes):
    """Counts for each pattern over a row selection (slice or index array).

    With prefix sharing, patterns of length >= 3 that open with the same
    two steps reuse the (rows x n_users) intermediate; the chain order is
    unchanged, so results are bit-identical either way.
    """
    counts: list = [None] * len(patterns)
    by_prefix: dict[tuple[int, int], list[int]] = {}
    for idx, pattern in enumerate(patterns):
        steps = pattern.steps
        if len(steps) == 1:
            counts[idx] = train.matrix(steps[0])[rows].astype(np.uint64)
        elif share_prefixes:
            by_prefix.setdefault(steps[:2], []).append(idx)
        else:
            first = train.matrix(steps[0])[rows]
            counts[idx] = _chain(train, pattern, first).astype(np.uint64)
    for (b1, b2), indices in by_prefix.items():
        head = train.matrix(b1)[rows]
        _guard_overflow(head, patterns.patterns[indices[0]])
        head = head @ train.transposed(b2)
        for idx in indices:
            pattern = patterns.patterns[idx]
            result = head
            for t, b in enumerate(pattern.steps[2:], start=3):
                _guard_overflow(result, pattern)
                factor = train.transposed(b) if t % 2 == 0 else train.matrix(b)
                result = result @ factor
            counts[idx] = result.astype(np.uint64)
    return counts


def iter_feature_blocks(
    train: MultiBehaviorDataset,
    patterns: PatternSet,
    chunk_size: int = DEFAULT_CHUNK_SIZE,
    user_range: tuple[int, int] | None = None,
    share_prefixes: bool = False,
) -> Iterator[FeatureBlock]:
    """Stream FeatureBlocks over user chunks; one block lives at a time."""
    chunk_size = check_chunk_size(chunk_size)
    if user_range is None:
        user_range = (0, train.n_users)
    start, stop = check_user_range(user_range, train.n_users)
    for lo in range(start, stop, chunk_size):
        hi = min(lo + chunk_size, stop)
        counts = _block_counts(train, patterns, slice(lo, hi), share_prefixes)
        yield FeatureBlock((lo, hi), patterns, counts)


def count_rows(
    train: MultiBehaviorDataset,
    patterns: PatternSet,
    rows: np.ndarray,
    share_prefixes: bool = False,
) -> list[sp.csr_matrix]:
    """Per-pattern counts for an arbitrary array of user rows."""
    rows = np.asarray(rows, dtype=np.int64)
    if rows.size and (rows.min() < 0 or rows.max() >= train.n_users):
        raise ValueError("user row indices out of range")
    return _block_counts(train, patterns, rows, share_prefixes)


def total_walks(train: MultiBehaviorDataset, pattern: BehaviorPattern) -> int:
    """Sum of walk counts over all (user, item) pairs via vector chains.

    Never materializes a product matrix: a ones vector is pushed through
    the chain, one sparse mat-vec per step.
    """
    vec = np.ones(train.n_users, dtype=np.int64)
    for t, b in enumerate(pattern.steps, start=1):
        if float(vec.sum(dtype=np.float64)) > _SAFE_LIMIT:
            raise CountOverflowError(
                f"walk-count total for pattern {pattern.steps} exceeds "
                "the 64-bit range"
            )
        # row vector times E (odd steps) or E.T (even steps)
        matrix = train.transposed(b) if t % 2 == 1 else train.matrix(b)
        vec = matrix @ vec
    return int(vec.sum(dtype=np.int64))


class WalkOracle:
    """Brute-force walk counter: exhaustive DFS, no visited-set pruning.

    Intended for small instances only; serves as ground truth for the
    matrix-chain counter.
    """

    def __init__(self, train: MultiBehaviorDataset):
        self.n_items = train.n_items
        self._user_adj = []
        self._item_adj = []
        for b in range(len(train.schema)):
            m = train.matrix(b)
            t = train.transposed(b)
            self._user_adj.append(
                [m.indices[m.indptr[u]:m.indptr[u + 1]].tolist()
                 for u in range(train.n_users)]
            )
            self._item_adj.append(
                [t.indices[t.indptr[i]:t.indptr[i + 1]].tolist()
                 for i in range(train.n_items)]
            )

    def counts_from(self, pattern: BehaviorPattern, user: int) -> np.ndarray:
        """Walk counts from one user to every item, by full enumeration."""
        out = np.zeros(self.n_items, dtype=np.int64)
        steps = pattern.steps
        last = len(steps) - 1

        def descend(node, depth, on_user_side):
            adj = self._user_adj if on_user_side else self._item_adj
            neighbors = adj[steps[depth]][node]
            if depth == last:
                for nb in neighbors:
                    out[nb] += 1
                return
            for nb in neighbors:
                descend(nb, depth + 1, not on_user_side)

        descend(user, 0, True)
        return out

    def count(self, pattern: BehaviorPattern, user: int, item: int) -> int:
        return int(self.counts_from(pattern, user)[item])


def count_paths_oracle(
    train: MultiBehaviorDataset, pattern: BehaviorPattern, user: int, item: int
) -> int:
    """Single-pair brute-force walk count (testing ground truth)."""
    return WalkOracle(train).count(pattern, user, item)
