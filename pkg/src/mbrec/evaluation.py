"""Evaluation protocol: leave-one-out ranking metrics, sparsity groups,
auxiliary-behavior noise, and experiment orchestration.

Each test user contributes a single held-out target item; the model
ranks every item the user has no train-target interaction with, and the
held-out item's 1-based rank drives hit and NDCG values.
"""

from __future__ import annotations

import math
from contextlib import contextmanager
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .config import RunConfig
from .counting import count_rows
from .dataset import (
    BehaviorSchema,
    MultiBehaviorDataset,
    SplitDataset,
    ingest,
    leave_one_out_split,
    load_dataset,
)
from .errors import DataError
from .model import (
    BehaviorPatternRecommender,
    FeatureWeights,
    NormalizationParams,
    rank_of_item,
    score_counts,
)
from .parallel import map_with_shared
from .patterns import PatternSet


def recall_at_k(rank: int | None, k: int) -> float:
    """Hit indicator for a single held-out item: 1 if rank <= k."""
    if k < 1:
        raise ValueError(f"K must be >= 1, got {k}")
    if rank is None:
        raise RuntimeError(
            "held-out item missing from the ranking; it is never a train "
            "positive, so this indicates a bug upstream"
        )
    return 1.0 if rank <= k else 0.0


def ndcg_at_k(rank: int | None, k: int) -> float:
    """Single-relevant-item NDCG: 1/log2(rank+1) inside the top k, else 0."""
    if recall_at_k(rank, k) == 0.0:
        return 0.0
    return 1.0 / math.log2(rank + 1)


@dataclass(frozen=True)
class EvalReport:
    """Mean Recall@K / NDCG@K over test users."""

    k_values: tuple[int, ...]
    recall: dict[int, float]
    ndcg: dict[int, float]
    n_users: int


def evaluate_ranks(
    ranks: Sequence[tuple[int, int]], k_values: Sequence[int]
) -> EvalReport:
    """Aggregate per-user held-out ranks into mean metrics.

    Sums run in ascending user order so results do not depend on how the
    ranks were produced.
    """
    k_values = tuple(int(k) for k in k_values)
    ordered = sorted(ranks)
    n = len(ordered)
    recall: dict[int, float] = {}
    ndcg: dict[int, float] = {}
    for k in k_values:
        hit_total = 0.0
        gain_total = 0.0
        for _, rank in ordered:
            hit_total += recall_at_k(rank, k)
            gain_total += ndcg_at_k(rank, k)
        recall[k] = hit_total / n if n else 0.0
        ndcg[k] = gain_total / n if n else 0.0
    return EvalReport(k_values, recall, ndcg, n)


def _rank_batch(payload, task):
    train, patterns, weights, norm, mode, share_prefixes = payload
    users, items = task
    counts = count_rows(train, patterns, users, share_prefixes)
    scores = score_counts(counts, weights, norm, mode)
    target = train.target_matrix
    out = []
    for r, (u, i) in enumerate(zip(users.tolist(), items.tolist())):
        held = target.indices[target.indptr[u]:target.indptr[u + 1]]
        out.append((u, rank_of_item(scores[r], i, held)))
    return out


def compute_test_ranks(
    train: MultiBehaviorDataset,
    test_pairs: Sequence[tuple[int, int]],
    patterns: PatternSet,
    weights: FeatureWeights,
    norm: NormalizationParams | None,
    mode: str = "zscore",
    chunk_size: int = 1024,
    workers: int = 1,
    share_prefixes: bool = False,
) -> list[tuple[int, int]]:
    """Held-out item rank per test user, batched over user chunks."""
    pairs = sorted(test_pairs)
    users = np.array([u for u, _ in pairs], dtype=np.int64)
    items = np.array([i for _, i in pairs], dtype=np.int64)
    tasks = [
        (users[lo:lo + chunk_size], items[lo:lo + chunk_size])
        for lo in range(0, len(pairs), chunk_size)
    ]
    payload = (train, patterns, weights, norm, mode, share_prefixes)
    batches = map_with_shared(_rank_batch, payload, tasks, workers)
    return [pair for batch in batches for pair in batch]


@dataclass(frozen=True)
class SparsityGroup:
    """One quantile group of test users by train target degree."""

    users: np.ndarray
    min_degree: int
    max_degree: int


@dataclass(frozen=True)
class GroupedEvalReport:
    groups: tuple[SparsityGroup, ...]
    reports: tuple[EvalReport, ...]


def group_users_by_sparsity(
    train: MultiBehaviorDataset,
    test_pairs: Sequence[tuple[int, int]],
    n_groups: int = 5,
) -> list[SparsityGroup]:
    """Partition test users into near-equal quantile groups by degree.

    Sorting is by train target degree ascending, ties by user index;
    group sizes differ by at most one.
    """
    if n_groups < 1:
        raise ValueError(f"n_groups must be >= 1, got {n_groups}")
    users = np.array(sorted(u for u, _ in test_pairs), dtype=np.int64)
    if users.size < n_groups:
        raise DataError(
            f"{users.size} test users cannot fill {n_groups} sparsity groups"
        )
    degrees = np.diff(train.target_matrix.indptr)[users]
    order = np.lexsort((users, degrees))
    groups = []
    for chunk in np.array_split(np.arange(users.size), n_groups):
        members = users[order[chunk]]
        deg = degrees[order[chunk]]
        groups.append(SparsityGroup(members, int(deg.min()), int(deg.max())))
    return groups


def grouped_report(
    groups: Sequence[SparsityGroup],
    ranks: Sequence[tuple[int, int]],
    k_values: Sequence[int],
) -> GroupedEvalReport:
    """Per-group metrics from already-computed held-out ranks."""
    by_user = dict(ranks)
    reports = tuple(
        evaluate_ranks([(u, by_user[u]) for u in g.users.tolist()], k_values)
        for g in groups
    )
    return GroupedEvalReport(tuple(groups), reports)


@dataclass(frozen=True)
class NoiseConfig:
    """Additive random noise on auxiliary behaviors."""

    fraction: float
    seed: int
    affected: tuple[int, ...] | None = None  # behavior indices; None = all auxiliary


def inject_noise(
    dataset: MultiBehaviorDataset, cfg: NoiseConfig
) -> MultiBehaviorDataset:
    """Add ``floor(fraction * nnz)`` fake interactions per auxiliary behavior.

    New (user, item) cells are drawn uniformly without replacement from
    the empty cells of each affected matrix; the target matrix is never
    touched. Deterministic under ``cfg.seed``.
    """
    if not 0.0 <= cfg.fraction <= 1.0:
        raise ValueError(f"noise fraction must be in [0, 1], got {cfg.fraction}")
    target_index = dataset.schema.target_index
    affected = (
        tuple(range(target_index)) if cfg.affected is None else tuple(cfg.affected)
    )
    if target_index in affected:
        raise ValueError("noise must not touch the target behavior")
    if cfg.fraction == 0.0 or not affected:
        return dataset
    rng = np.random.default_rng(cfg.seed)
    n_users, n_items = dataset.n_users, dataset.n_items
    total_cells = n_users * n_items
    matrices = list(dataset.matrices)
    for b in sorted(affected):
        matrix = matrices[b]
        n_add = int(cfg.fraction * matrix.nnz)
        if n_add == 0:
            continue
        if n_add > total_cells - matrix.nnz:
            raise DataError(
                f"cannot add {n_add} noise edges to behavior "
                f"{dataset.schema.names[b]!r}: only "
                f"{total_cells - matrix.nnz} empty cells"
            )
        coo = matrix.tocoo()
        taken = set((coo.row.astype(np.int64) * n_items + coo.col).tolist())
        chosen: list[int] = []
        while len(chosen) < n_add:
            draw = rng.integers(0, total_cells, size=max(256, 2 * n_add))
            for code in draw.tolist():
                if code in taken:
                    continue
                taken.add(code)
                chosen.append(code)
                if len(chosen) == n_add:
                    break
        codes = np.array(chosen, dtype=np.int64)
        rows = np.concatenate([coo.row.astype(np.int64), codes // n_items])
        cols = np.concatenate([coo.col.astype(np.int64), codes % n_items])
        matrices[b] = _binary(rows, cols, matrix.shape)
    return dataset.with_matrices(matrices)


def _binary(rows, cols, shape):
    import scipy.sparse as sp

    m = sp.csr_matrix(
        (np.ones(len(rows), dtype=np.int64), (rows, cols)), shape=shape
    )
    m.sum_duplicates()
    m.data[:] = 1
    return m


@contextmanager
def _stage(name: str):
    """Tag exceptions escaping a pipeline stage with the stage name."""
    try:
        yield
    except Exception as exc:
        if getattr(exc, "stage", None) is None:
            try:
                exc.stage = name
            except AttributeError:
                pass
        raise


@dataclass
class ExperimentResult:
    config: RunConfig
    split: SplitDataset
    train: MultiBehaviorDataset
    estimator: BehaviorPatternRecommender
    ranks: list[tuple[int, int]]
    report: EvalReport


def _run_on_split(
    config: RunConfig, train: MultiBehaviorDataset, test_pairs
) -> ExperimentResult:
    with _stage("fit"):
        estimator = BehaviorPatternRecommender(
            alpha=config.alpha,
            epsilon=config.epsilon,
            mode=config.mode,
            chunk_size=config.chunk_size,
            share_prefixes=config.share_prefixes,
            n_jobs=config.threads,
        ).fit(train)
    with _stage("score"):
        ranks = compute_test_ranks(
            train,
            test_pairs,
            estimator.patterns_,
            estimator.weights_,
            estimator.norm_,
            config.mode,
            config.chunk_size,
            config.threads,
            config.share_prefixes,
        )
    with _stage("metrics"):
        report = evaluate_ranks(ranks, config.k_values)
    return ExperimentResult(
        config, SplitDataset(train, list(test_pairs)), train, estimator, ranks, report
    )


def load_split(config: RunConfig, records=None) -> SplitDataset:
    """Shared ingest + split front half of every experiment."""
    with _stage("ingest"):
        schema = BehaviorSchema(tuple(config.behaviors))
        if records is None:
            dataset = load_dataset(config.input, schema)
        else:
            dataset = ingest(records, schema)
    with _stage("split"):
        return leave_one_out_split(dataset, config.split_seed)


def run_experiment(
    config: RunConfig, records=None, noise_fraction: float | None = None
) -> ExperimentResult:
    """Full pipeline: ingest, split, optional noise, fit, rank, metrics.

    Fully deterministic given the config's seeds. ``records`` bypasses
    file loading for in-memory runs.
    """
    with _stage("config"):
        config.validate(require_input=records is None)
    split = load_split(config, records)
    train = split.train
    if noise_fraction is not None and noise_fraction > 0.0:
        with _stage("noise"):
            train = inject_noise(
                train, NoiseConfig(noise_fraction, config.noise_seed)
            )
    return _run_on_split(config, train, split.test_pairs)


def run_noise_sweep(
    config: RunConfig, records=None
) -> list[tuple[float, ExperimentResult]]:
    """One experiment per noise fraction, over a single shared split."""
    with _stage("config"):
        config.validate(require_input=records is None)
    split = load_split(config, records)
    rows = []
    for fraction in config.noise_fractions:
        train = split.train
        if fraction > 0.0:
            with _stage("noise"):
                train = inject_noise(
                    train, NoiseConfig(fraction, config.noise_seed)
                )
        rows.append((fraction, _run_on_split(config, train, split.test_pairs)))
    return rows
