"""Multi-behavior recommendation via mined walk-count patterns.

Builds exact walk counts over per-behavior interaction matrices, fits a
naive-Bayes odds model on them, and evaluates with a leave-one-out
ranking protocol.
"""

from .config import RunConfig
from .counting import (
    FeatureBlock,
    WalkOracle,
    count_paths,
    count_paths_oracle,
    iter_feature_blocks,
    total_walks,
)
from .dataset import (
    BehaviorSchema,
    MultiBehaviorDataset,
    SplitDataset,
    ingest,
    leave_one_out_split,
    load_dataset,
    read_interaction_file,
)
from .errors import (
    ConfigError,
    CountOverflowError,
    DataError,
    DegenerateStatisticsError,
    EmptyDatasetError,
    PatternCapacityError,
    RecommenderError,
    SchemaMismatchError,
)
from .evaluation import (
    EvalReport,
    NoiseConfig,
    evaluate_ranks,
    group_users_by_sparsity,
    grouped_report,
    inject_noise,
    ndcg_at_k,
    recall_at_k,
    run_experiment,
    run_noise_sweep,
)
from .model import (
    BehaviorPatternRecommender,
    FeatureWeights,
    NormalizationParams,
    ScoreBlock,
    fit_weights,
    load_model,
    normalization_from_stats,
    rank_of_item,
    recommend_topk,
    score_block,
    score_counts,
)
from .patterns import BehaviorPattern, PatternSet, enumerate_patterns, parse_pattern
from .statistics import (
    PatternStatistics,
    accumulate_statistics,
    accumulate_statistics_parallel,
)

__version__ = "0.1.0"

__all__ = [
    "BehaviorPattern",
    "BehaviorPatternRecommender",
    "BehaviorSchema",
    "ConfigError",
    "CountOverflowError",
    "DataError",
    "DegenerateStatisticsError",
    "EmptyDatasetError",
    "EvalReport",
    "FeatureBlock",
    "FeatureWeights",
    "MultiBehaviorDataset",
    "NoiseConfig",
    "NormalizationParams",
    "PatternCapacityError",
    "PatternSet",
    "PatternStatistics",
    "RecommenderError",
    "RunConfig",
    "SchemaMismatchError",
    "ScoreBlock",
    "SplitDataset",
    "WalkOracle",
    "accumulate_statistics",
    "accumulate_statistics_parallel",
    "count_paths",
    "count_paths_oracle",
    "enumerate_patterns",
    "evaluate_ranks",
    "fit_weights",
    "group_users_by_sparsity",
    "grouped_report",
    "ingest",
    "inject_noise",
    "iter_feature_blocks",
    "leave_one_out_split",
    "load_dataset",
    "load_model",
    "ndcg_at_k",
    "normalization_from_stats",
    "parse_pattern",
    "rank_of_item",
    "read_interaction_file",
    "recall_at_k",
    "recommend_topk",
    "run_experiment",
    "run_noise_sweep",
    "score_block",
    "score_counts",
    "total_walks",
]
