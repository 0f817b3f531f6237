"""Naive-Bayes odds model over walk-count features.

Each pattern f gets class-conditional occurrence probabilities estimated
from count sums: p_pos(f) is f's share of all walk occurrences that land
on target-positive pairs, p_neg(f) its share on the rest. A pair's score
is the log odds ratio, linear in the counts:

    score(u, i) = sum_f x_f * (log p_pos(f) - log p_neg(f))

with x_f either the raw count (``raw`` mode) or its z-scored value
(``zscore`` mode, the default). The user-independent prior odds term is
dropped; it cannot change any ranking.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.sparse as sp
from sklearn.base import BaseEstimator

from .counting import FeatureBlock, count_rows, iter_feature_blocks
from .dataset import BehaviorSchema, MultiBehaviorDataset
from .errors import DataError, DegenerateStatisticsError
from .patterns import PatternSet, enumerate_patterns, parse_pattern
from .statistics import PatternStatistics, accumulate_statistics_parallel
from .validation import check_chunk_size, check_fitted, check_mode


@dataclass(frozen=True)
class FeatureWeights:
    """Per-pattern class-conditional probabilities and log-odds weights."""

    patterns: PatternSet
    p_pos: np.ndarray
    p_neg: np.ndarray
    log_odds: np.ndarray
    epsilon: float


@dataclass(frozen=True)
class NormalizationParams:
    """Per-pattern mean/std of counts over every train (user, item) pair.

    Constant features get std 1 substituted and are flagged degenerate.
    """

    mean: np.ndarray
    std: np.ndarray
    degenerate: np.ndarray


@dataclass
class ScoreBlock:
    """Dense log-odds scores for a block of users."""

    user_range: tuple[int, int]
    scores: np.ndarray


def fit_weights(stats: PatternStatistics, epsilon: float = 1.0) -> FeatureWeights:
    """Estimate per-pattern probabilities with additive smoothing.

    With ``epsilon == 0`` the estimates are the exact count ratios, which
    requires every pattern to have nonzero positive and negative sums.
    """
    if epsilon < 0:
        raise ValueError(f"epsilon must be >= 0, got {epsilon}")
    n = len(stats.patterns)
    pos = stats.pos_sum
    neg = [stats.neg_sum(i) for i in range(n)]
    if epsilon == 0:
        for i, pattern in enumerate(stats.patterns):
            if pos[i] == 0 or neg[i] == 0:
                raise DegenerateStatisticsError(
                    f"pattern {pattern.steps} has an empty "
                    f"{'positive' if pos[i] == 0 else 'negative'} count sum; "
                    "epsilon=0 needs both sides nonzero"
                )
    pos_total = sum(pos)
    neg_total = sum(neg)
    p_pos = np.array([(p + epsilon) / (pos_total + epsilon * n) for p in pos])
    p_neg = np.array([(q + epsilon) / (neg_total + epsilon * n) for q in neg])
    return FeatureWeights(
        stats.patterns, p_pos, p_neg, np.log(p_pos) - np.log(p_neg), float(epsilon)
    )


def normalization_from_stats(stats: PatternStatistics) -> NormalizationParams:
    """Exact population mean/std of each pattern's counts over all pairs."""
    pc = stats.pair_count
    if pc == 0:
        raise ValueError("statistics cover zero pairs")
    mean = np.array([s / pc for s in stats.all_sum])
    # variance via integers: (pc * sum_sq - sum^2) / pc^2, exact and >= 0
    var_num = [pc * sq - s * s for s, sq in zip(stats.all_sum, stats.all_sq_sum)]
    degenerate = np.array([v == 0 for v in var_num])
    std = np.sqrt(np.array([v / (pc * pc) for v in var_num]))
    std[degenerate] = 1.0
    return NormalizationParams(mean, std, degenerate)


def _effective_weights(weights, norm, mode):
    """Scoring is affine in the counts in both modes; fold the z-score in."""
    mode = check_mode(mode)
    if mode == "raw":
        return weights.log_odds.copy(), 0.0
    if norm is None:
        raise ValueError("zscore mode requires normalization parameters")
    scaled = weights.log_odds / norm.std
    offset = float(np.sum(weights.log_odds * norm.mean / norm.std))
    return scaled, offset


def score_counts(
    counts: list[sp.csr_matrix],
    weights: FeatureWeights,
    norm: NormalizationParams | None = None,
    mode: str = "zscore",
) -> np.ndarray:
    """Dense score rows for pre-computed per-pattern count matrices."""
    if len(counts) != len(weights.patterns):
        raise ValueError(
            f"{len(counts)} count matrices for {len(weights.patterns)} patterns"
        )
    scaled, offset = _effective_weights(weights, norm, mode)
    acc = None
    for w, matrix in zip(scaled, counts):
        term = matrix.astype(np.float64)
        term.data *= w
        acc = term if acc is None else acc + term
    dense = acc.toarray() if acc is not None else np.zeros((0, 0))
    if offset:
        dense -= offset
    return dense


def score_block(
    block: FeatureBlock,
    weights: FeatureWeights,
    norm: NormalizationParams | None = None,
    mode: str = "zscore",
) -> ScoreBlock:
    """Score every (user, item) pair of a feature block."""
    if block.patterns != weights.patterns:
        raise ValueError("feature block and weights use different pattern sets")
    return ScoreBlock(block.user_range, score_counts(block.counts, weights, norm, mode))


def recommend_topk(
    scores: ScoreBlock, train_positive: sp.csr_matrix, k: int
) -> list[np.ndarray]:
    """Top-k item lists per user, excluding train-target positives.

    Ties break toward the lower item index; lists may be shorter than k
    when fewer items are eligible.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if train_positive.shape[0] != scores.scores.shape[0]:
        raise ValueError("positive rows do not align with score rows")
    out = []
    for r in range(scores.scores.shape[0]):
        row = scores.scores[r]
        held = train_positive.indices[
            train_positive.indptr[r]:train_positive.indptr[r + 1]
        ]
        order = np.argsort(-row, kind="stable")  # stable keeps index order on ties
        if held.size:
            order = order[~np.isin(order, held)]
        out.append(order[:k].astype(np.int64))
    return out


def rank_of_item(row: np.ndarray, item: int, excluded: np.ndarray) -> int:
    """1-based rank of ``item`` among eligible items under top-k ordering."""
    if np.isin(item, excluded):
        raise RuntimeError(
            f"held-out item {item} is a train positive; it must stay eligible"
        )
    target_score = row[item]
    eligible = np.ones(row.size, dtype=bool)
    eligible[excluded] = False
    better = int(np.count_nonzero(eligible & (row > target_score)))
    tied_before = int(
        np.count_nonzero(eligible[:item] & (row[:item] == target_score))
    )
    return 1 + better + tied_before


class BehaviorPatternRecommender(BaseEstimator):
    """Recommends target-behavior items from mined walk-count patterns.

    Follows the scikit-learn estimator protocol: hyperparameters are
    constructor arguments, ``fit`` learns from a
    :class:`~mbrec.dataset.MultiBehaviorDataset`, and fitted state lives
    in trailing-underscore attributes.

    Parameters
    ----------
    alpha : int, default 1
        Walk-length cap; patterns run up to length ``2 * alpha + 1``.
    epsilon : float, default 1.0
        Additive smoothing for the probability estimates.
    mode : {"zscore", "raw"}, default "zscore"
        Feature transform used at scoring time.
    chunk_size : int, default 1024
        Users per streamed counting block.
    share_prefixes : bool, default False
        Reuse two-step chain prefixes across patterns (same results,
        fewer multiplications).
    n_jobs : int, default 1
        Worker processes for chunk-parallel counting; results are
        identical for any value.
    """

    def __init__(
        self,
        alpha: int = 1,
        epsilon: float = 1.0,
        mode: str = "zscore",
        chunk_size: int = 1024,
        share_prefixes: bool = False,
        n_jobs: int = 1,
    ):
        self.alpha = alpha
        self.epsilon = epsilon
        self.mode = mode
        self.chunk_size = chunk_size
        self.share_prefixes = share_prefixes
        self.n_jobs = n_jobs

    def fit(self, dataset: MultiBehaviorDataset, y=None):
        """Mine pattern statistics from ``dataset`` and fit the weights."""
        if not isinstance(dataset, MultiBehaviorDataset):
            raise TypeError("fit expects a MultiBehaviorDataset")
        check_mode(self.mode)
        check_chunk_size(self.chunk_size)
        self.patterns_ = enumerate_patterns(dataset.schema, self.alpha)
        self.stats_ = accumulate_statistics_parallel(
            dataset,
            self.patterns_,
            chunk_size=self.chunk_size,
            workers=self.n_jobs,
            share_prefixes=self.share_prefixes,
        )
        self.weights_ = fit_weights(self.stats_, self.epsilon)
        self.norm_ = normalization_from_stats(self.stats_)
        self.train_ = dataset
        return self

    def score_users(self, user_range: tuple[int, int]) -> ScoreBlock:
        """Dense scores for a contiguous user range of the fitted dataset."""
        check_fitted(self, ("weights_", "train_"))
        if user_range[1] <= user_range[0]:
            raise ValueError(f"empty user range {user_range}")
        blocks = list(
            iter_feature_blocks(
                self.train_,
                self.patterns_,
                chunk_size=max(self.chunk_size, user_range[1] - user_range[0]),
                user_range=user_range,
                share_prefixes=self.share_prefixes,
            )
        )
        return score_block(blocks[0], self.weights_, self.norm_, self.mode)

    def score_rows(self, rows: np.ndarray) -> np.ndarray:
        """Dense scores for an arbitrary array of user indices."""
        check_fitted(self, ("weights_", "train_"))
        counts = count_rows(
            self.train_, self.patterns_, rows, self.share_prefixes
        )
        return score_counts(counts, self.weights_, self.norm_, self.mode)

    def recommend(self, user_range: tuple[int, int], k: int = 10) -> list[np.ndarray]:
        """Top-k item indices per user in the range, train positives excluded."""
        block = self.score_users(user_range)
        lo, hi = block.user_range
        return recommend_topk(block, self.train_.target_matrix[lo:hi], k)

    def to_document(self) -> dict:
        """Serializable model document (schema, hyperparameters, weights)."""
        check_fitted(self, ("weights_", "norm_", "stats_"))
        schema = self.train_.schema
        records = {}
        for i, pattern in enumerate(self.patterns_):
            records[pattern.label(schema)] = {
                "pos_sum": self.stats_.pos_sum[i],
                "neg_sum": self.stats_.neg_sum(i),
                "p_pos": float(self.weights_.p_pos[i]),
                "p_neg": float(self.weights_.p_neg[i]),
                "weight": float(self.weights_.log_odds[i]),
                "mean": float(self.norm_.mean[i]),
                "std": float(self.norm_.std[i]),
            }
        return {
            "epsilon": self.epsilon,
            "alpha": self.alpha,
            "mode": self.mode,
            "schema": list(schema.names),
            "patterns": records,
        }

    def save(self, path) -> None:
        Path(path).write_text(
            json.dumps(self.to_document(), indent=2) + "\n", encoding="utf-8"
        )


@dataclass(frozen=True)
class ModelDocument:
    """A fitted model reloaded from its JSON export."""

    schema: BehaviorSchema
    alpha: int
    epsilon: float
    mode: str
    patterns: PatternSet
    weights: FeatureWeights
    norm: NormalizationParams


def load_model(path) -> ModelDocument:
    path = Path(path)
    if not path.is_file():
        raise DataError(f"model file not found: {path}")
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
        schema = BehaviorSchema(tuple(doc["schema"]))
        records = doc["patterns"]
        patterns = PatternSet(
            tuple(parse_pattern(label, schema) for label in records), int(doc["alpha"])
        )
        p_pos = np.array([records[l]["p_pos"] for l in records])
        p_neg = np.array([records[l]["p_neg"] for l in records])
        weight = np.array([records[l]["weight"] for l in records])
        mean = np.array([records[l]["mean"] for l in records])
        std = np.array([records[l]["std"] for l in records])
    except (KeyError, ValueError, TypeError) as exc:
        raise DataError(f"malformed model document {path}: {exc}") from exc
    weights = FeatureWeights(patterns, p_pos, p_neg, weight, float(doc["epsilon"]))
    norm = NormalizationParams(mean, std, std == 1.0)
    return ModelDocument(
        schema, int(doc["alpha"]), float(doc["epsilon"]), str(doc["mode"]),
        patterns, weights, norm,
    )
