"""Streaming, exact-integer count statistics feeding the Bayes fit.

Per pattern we track the count sum over target-positive pairs, the count
sum over all pairs, and the sum of squared counts (for z-score
parameters). All sums are exact Python integers: partial numpy sums are
sliced so no 64-bit accumulator can wrap, then widened.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .counting import FeatureBlock, iter_feature_blocks
from .dataset import MultiBehaviorDataset
from .patterns import PatternSet
from .validation import check_chunk_size


def exact_sum(values: np.ndarray) -> int:
    """Exact integer sum of nonnegative uint64/int64 values."""
    if values.size == 0:
        return 0
    vmax = int(values.max())
    if vmax == 0:
        return 0
    step = max(1, (2**63 - 1) // vmax)
    total = 0
    for lo in range(0, values.size, step):
        total += int(values[lo:lo + step].sum(dtype=np.uint64))
    return total


def exact_square_sum(values: np.ndarray) -> int:
    """Exact integer sum of squares of nonnegative values."""
    if values.size == 0:
        return 0
    vmax = int(values.max())
    if vmax == 0:
        return 0
    if vmax < 2**31:  # squares stay below 2**62
        squares = values.astype(np.uint64)
        squares *= squares
        return exact_sum(squares)
    return sum(int(v) * int(v) for v in values.tolist())


@dataclass
class PatternStatistics:
    """Per-pattern count sums over a (possibly partial) user population."""

    patterns: PatternSet
    pos_sum: list[int]
    all_sum: list[int]
    all_sq_sum: list[int]
    pair_count: int
    pos_pair_count: int

    def neg_sum(self, idx: int) -> int:
        return self.all_sum[idx] - self.pos_sum[idx]

    def merge(self, other: "PatternStatistics") -> "PatternStatistics":
        """Combine statistics of disjoint user ranges (commutative)."""
        if self.patterns != other.patterns:
            raise ValueError("cannot merge statistics over different pattern sets")
        return PatternStatistics(
            self.patterns,
            [a + b for a, b in zip(self.pos_sum, other.pos_sum)],
            [a + b for a, b in zip(self.all_sum, other.all_sum)],
            [a + b for a, b in zip(self.all_sq_sum, other.all_sq_sum)],
            self.pair_count + other.pair_count,
            self.pos_pair_count + other.pos_pair_count,
        )


def empty_statistics(patterns: PatternSet) -> PatternStatistics:
    n = len(patterns)
    return PatternStatistics(patterns, [0] * n, [0] * n, [0] * n, 0, 0)


def block_statistics(
    block: FeatureBlock, train: MultiBehaviorDataset
) -> PatternStatistics:
    """Statistics contribution of a single feature block."""
    lo, hi = block.user_range
    target = train.target_matrix[lo:hi].astype(np.uint64)
    pos_sum, all_sum, all_sq = [], [], []
    for counts in block.counts:
        all_sum.append(exact_sum(counts.data))
        all_sq.append(exact_square_sum(counts.data))
        pos_sum.append(exact_sum(counts.multiply(target).data))
    return PatternStatistics(
        block.patterns,
        pos_sum,
        all_sum,
        all_sq,
        (hi - lo) * train.n_items,
        int(target.nnz),
    )


def accumulate_statistics(
    train: MultiBehaviorDataset,
    patterns: PatternSet,
    chunk_size: int = 1024,
    user_range: tuple[int, int] | None = None,
    share_prefixes: bool = False,
) -> PatternStatistics:
    """Stream user chunks and fold their statistics together.

    Integer arithmetic makes the result independent of ``chunk_size``
    and of how ranges are partitioned.
    """
    check_chunk_size(chunk_size)
    stats = empty_statistics(patterns)
    for block in iter_feature_blocks(
        train, patterns, chunk_size, user_range, share_prefixes
    ):
        stats = stats.merge(block_statistics(block, train))
    return stats


def _stats_task(payload, user_range):
    train, patterns, chunk_size, share_prefixes = payload
    return accumulate_statistics(
        train, patterns, chunk_size, user_range, share_prefixes
    )


def accumulate_statistics_parallel(
    train: MultiBehaviorDataset,
    patterns: PatternSet,
    chunk_size: int = 1024,
    workers: int = 1,
    share_prefixes: bool = False,
) -> PatternStatistics:
    """Chunk-parallel accumulation; exact merge makes any split identical."""
    if workers <= 1:
        return accumulate_statistics(
            train, patterns, chunk_size, share_prefixes=share_prefixes
        )
    from .parallel import map_with_shared

    check_chunk_size(chunk_size)
    ranges = [
        (lo, min(lo + chunk_size, train.n_users))
        for lo in range(0, train.n_users, chunk_size)
    ]
    parts = map_with_shared(
        _stats_task, (train, patterns, chunk_size, share_prefixes), ranges, workers
    )
    stats = empty_statistics(patterns)
    for part in parts:
        stats = stats.merge(part)
    return stats
