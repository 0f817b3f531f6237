"""Acceptance suite: one test per release criterion.

Every test prints a ``ACCEPTANCE <n>: PASS`` line on success so a ``-s``
run doubles as a checklist. Criterion 8 needs external datasets and is
skipped unless their paths are provided via environment variables.
"""

import dataclasses
import math
import os
import resource
import subprocess
import sys
import time
import warnings
from fractions import Fraction

import numpy as np
import pytest

import mbrec
from mbrec import (
    BehaviorPattern,
    RunConfig,
    WalkOracle,
    accumulate_statistics,
    count_paths,
    enumerate_patterns,
    evaluate_ranks,
    fit_weights,
    group_users_by_sparsity,
    grouped_report,
    ingest,
    inject_noise,
    leave_one_out_split,
    ndcg_at_k,
    recall_at_k,
    run_experiment,
    run_noise_sweep,
)
from mbrec.evaluation import NoiseConfig

from conftest import TOY_BEHAVIORS
from synth import (
    clustered_scale_tsv,
    dense_two_behavior_dataset,
    planted_pattern_records,
    random_dataset,
)


def _announce(n, detail=""):
    print(f"\nACCEPTANCE {n}: PASS {detail}".rstrip())


def test_criterion_1_oracle_equivalence():
    """Matrix-chain counts equal DFS oracle counts, exactly, on 200
    random instances (|U|,|I| <= 30, |B| in {2,3,4}, density <= 0.2)."""
    started = time.perf_counter()
    pairs_checked = 0
    for seed in range(200):
        ds = random_dataset(seed)
        oracle = WalkOracle(ds)
        wide = enumerate_patterns(ds.schema, 1)
        narrow = enumerate_patterns(ds.schema, 0)
        assert set(narrow.patterns) <= set(wide.patterns)
        for pattern in wide:
            counts = count_paths(ds, pattern, (0, ds.n_users)).toarray()
            for u in range(ds.n_users):
                expected = oracle.counts_from(pattern, u)
                assert (counts[u] == expected).all(), (seed, pattern.steps, u)
                pairs_checked += ds.n_items
    elapsed = time.perf_counter() - started
    assert elapsed < 120.0, f"oracle sweep took {elapsed:.1f}s"
    _announce(1, f"({pairs_checked} pairs, {elapsed:.1f}s)")


def test_criterion_2_worked_example_features(toy_dataset):
    """The storefront fixture reproduces the worked feature rows."""
    u3 = toy_dataset.user_index["u3"]
    i1 = toy_dataset.item_index["i1"]
    i2 = toy_dataset.item_index["i2"]
    i3 = toy_dataset.item_index["i3"]
    full = (0, toy_dataset.n_users)
    vvc = count_paths(toy_dataset, BehaviorPattern((0, 0, 1)), full).toarray()
    vvv = count_paths(toy_dataset, BehaviorPattern((0, 0, 0)), full).toarray()
    v = count_paths(toy_dataset, BehaviorPattern((0,)), full).toarray()
    assert vvc[u3, i1] == 2
    assert vvv[u3, i1] == 1
    assert v[u3, i2] == 1
    assert v[u3, i3] == 1
    assert toy_dataset.target_matrix[u3, i3] == 1  # label of (u3, i3)
    _announce(2)


def _exact_instances(count=20):
    """Dense instances where epsilon=0 is well defined for every pattern."""
    found = []
    seed = 0
    while len(found) < count:
        ds = dense_two_behavior_dataset(seed, n_users=6, n_items=6)
        patterns = enumerate_patterns(ds.schema, 1)
        stats = accumulate_statistics(ds, patterns)
        seed += 1
        if all(
            stats.pos_sum[i] > 0 and stats.neg_sum(i) > 0
            for i in range(len(patterns))
        ):
            found.append((ds, patterns, stats))
        assert seed < 400, "could not draw enough non-degenerate instances"
    return found


def test_criterion_3_bayes_fit_exactness():
    """Unsmoothed fit matches rational arithmetic to 1e-12 relative and
    raw-mode scores match linear-space products to 1e-9 relative."""
    instances = _exact_instances(20)
    for ds, patterns, stats in instances:
        weights = fit_weights(stats, epsilon=0.0)
        pos_total = sum(stats.pos_sum)
        neg_total = sum(stats.neg_sum(i) for i in range(len(patterns)))
        fractions_pos = [
            Fraction(stats.pos_sum[i], pos_total) for i in range(len(patterns))
        ]
        fractions_neg = [
            Fraction(stats.neg_sum(i), neg_total) for i in range(len(patterns))
        ]
        for i in range(len(patterns)):
            assert abs(weights.p_pos[i] - float(fractions_pos[i])) <= 1e-12 * float(
                fractions_pos[i]
            )
            assert abs(weights.p_neg[i] - float(fractions_neg[i])) <= 1e-12 * float(
                fractions_neg[i]
            )
        block = next(
            mbrec.iter_feature_blocks(ds, patterns, chunk_size=ds.n_users)
        )
        scores = mbrec.score_counts(block.counts, weights, None, mode="raw")
        dense = [c.toarray() for c in block.counts]
        max_count = max(int(c.max()) if c.size else 0 for c in dense)
        assert max_count <= 20, "instance outside the comparison regime"
        for u in range(ds.n_users):
            for i in range(ds.n_items):
                ratio = Fraction(1)
                for f in range(len(patterns)):
                    n = int(dense[f][u, i])
                    if n:
                        ratio *= Fraction(fractions_pos[f], fractions_neg[f]) ** n
                assert math.exp(scores[u, i]) == pytest.approx(
                    float(ratio), rel=1e-9
                )
    _announce(3, f"({len(instances)} instances)")


def _oracle_raw_ranks(train, test_pairs, patterns):
    """Fully independent scoring: DFS counts + Fraction probabilities."""
    oracle = WalkOracle(train)
    counts = {
        u: np.vstack([oracle.counts_from(p, u) for p in patterns])
        for u in range(train.n_users)
    }
    pos = [0] * len(patterns)
    alln = [0] * len(patterns)
    target = train.target_matrix.toarray()
    for u in range(train.n_users):
        for f in range(len(patterns)):
            alln[f] += int(counts[u][f].sum())
            pos[f] += int(counts[u][f][target[u] == 1].sum())
    # smoothed weights, epsilon = 1, matching the pipeline default
    pos_total, neg_total = sum(pos), sum(alln) - sum(pos)
    n = len(patterns)
    weight = [
        math.log(Fraction(pos[f] + 1, pos_total + n))
        - math.log(Fraction(alln[f] - pos[f] + 1, neg_total + n))
        for f in range(n)
    ]
    ranks = []
    for u, held in test_pairs:
        scores = np.array(
            [
                sum(weight[f] * int(counts[u][f][i]) for f in range(n))
                for i in range(train.n_items)
            ]
        )
        excluded = np.flatnonzero(target[u] == 1)
        ranks.append((u, mbrec.rank_of_item(scores, held, excluded)))
    return ranks


def test_criterion_4_planted_pattern_end_to_end():
    """Recall@10 >= 0.95 on the planted view>view>cart construction, in
    raw and zscore modes; a small instance is verified against fully
    independent oracle scoring first."""
    # small companion: 60 users x 40 items, no distractors
    records = planted_pattern_records(
        n_communities=5, users_per=12, items_per=8, seed=3,
        view_noise=0.0, cart_noise=0.0,
    )
    config = RunConfig(
        behaviors=("view", "cart", "purchase"), k_values=(10,),
        split_seed=5, mode="raw",
    )
    small = run_experiment(config, records=records)
    oracle_ranks = _oracle_raw_ranks(
        small.train, small.split.test_pairs, small.estimator.patterns_
    )
    assert sorted(small.ranks) == sorted(oracle_ranks)
    assert small.report.recall[10] == 1.0

    # full-size instance with 10% uniform view noise and 1% cart noise
    records = planted_pattern_records(
        n_communities=25, users_per=20, items_per=8, seed=0,
        view_noise=0.1, cart_noise=0.01,
    )
    recalls = {}
    for mode in ("raw", "zscore"):
        cfg = dataclasses.replace(config, mode=mode)
        result = run_experiment(cfg, records=records)
        assert result.report.n_users == 500
        recalls[mode] = result.report.recall[10]
        assert recalls[mode] >= 0.95, f"{mode}: recall@10 = {recalls[mode]}"
    _announce(4, f"(recall@10 raw={recalls['raw']:.3f} zscore={recalls['zscore']:.3f})")


def test_criterion_5_metric_correctness():
    """Hand-checked metric values plus exact partition consistency."""
    assert ndcg_at_k(1, 10) == 1.0
    assert ndcg_at_k(3, 10) == pytest.approx(0.5, abs=1e-15)
    assert recall_at_k(11, 10) == 0.0
    assert ndcg_at_k(11, 10) == 0.0
    assert recall_at_k(10, 10) == 1.0

    rng = np.random.default_rng(12)
    ranks = [(u, int(r)) for u, r in enumerate(rng.integers(1, 25, size=37))]
    ks = (5, 10, 50)
    overall = evaluate_ranks(ranks, ks)
    ds = random_dataset(70, n_users=37, n_items=50, n_behaviors=2, density=0.3)
    groups = group_users_by_sparsity(ds, [(u, 0) for u, _ in ranks], 5)
    grouped = grouped_report(groups, ranks, ks)
    for k in ks:
        for metric in ("recall", "ndcg"):
            weighted = sum(
                getattr(rep, metric)[k] * rep.n_users for rep in grouped.reports
            )
            assert abs(weighted / overall.n_users - getattr(overall, metric)[k]) <= 1e-12
    _announce(5)


def _medium_records():
    rng = np.random.default_rng(99)
    records = []
    for u in range(300):
        for i in rng.choice(120, size=6, replace=False):
            records.append((f"u{u}", f"i{i}", "view"))
        for i in rng.choice(120, size=2, replace=False):
            records.append((f"u{u}", f"i{i}", "cart"))
        for i in rng.choice(120, size=2, replace=False):
            records.append((f"u{u}", f"i{i}", "purchase"))
    return records


def test_criterion_6a_determinism_across_threads_and_chunks():
    """Reports are identical for threads {1, 8} x chunk_size {64, 1024}."""
    records = _medium_records()
    base = RunConfig(
        behaviors=TOY_BEHAVIORS, k_values=(10, 50), split_seed=2
    )
    results = []
    for threads in (1, 8):
        for chunk in (64, 1024):
            cfg = dataclasses.replace(base, threads=threads, chunk_size=chunk)
            results.append(run_experiment(cfg, records=records))
    reference = results[0]
    for other in results[1:]:
        assert other.ranks == reference.ranks
        assert other.report == reference.report  # exact float equality
    _announce("6a", f"(n_users={reference.report.n_users})")


def test_criterion_6b_production_scale_budget(tmp_path):
    """A ~49k x ~39k, ~2M-interaction run finishes within 30 minutes and
    16 GB through the real CLI."""
    data = tmp_path / "scale.tsv"
    total = clustered_scale_tsv(
        data, views_per_user=31, carts_per_user=7, buys_per_user=5, seed=11
    )
    assert 1_800_000 <= total <= 2_200_000
    report = tmp_path / "scale_report.tsv"
    started = time.perf_counter()
    proc = subprocess.run(
        [
            sys.executable, "-m", "mbrec", "eval",
            "--input", str(data),
            "--behaviors", "view,cart,purchase",
            "--alpha", "1", "--k", "10,50",
            "--split-seed", "1", "--chunk-size", "1024",
            "--share-prefixes",
            "--output", str(report),
        ],
        capture_output=True,
        text=True,
    )
    elapsed = time.perf_counter() - started
    assert proc.returncode == 0, proc.stderr
    assert elapsed <= 1800.0, f"scale run took {elapsed:.0f}s"
    peak_kb = resource.getrusage(resource.RUSAGE_CHILDREN).ru_maxrss
    assert peak_kb <= 16 * 1024 * 1024, f"peak rss {peak_kb / 2**20:.1f} GiB"
    rows = [
        line.split("\t")
        for line in report.read_text().splitlines()
        if not line.startswith(("#", "metric"))
    ]
    values = {(r[0], r[1]): float(r[2]) for r in rows}
    assert values[("recall", "10")] > 0.0
    assert values[("ndcg", "10")] <= values[("recall", "10")]
    _announce(
        "6b",
        f"({total} interactions, {elapsed:.0f}s, {peak_kb / 2**20:.1f} GiB, "
        f"recall@10={values[('recall', '10')]:.4f})",
    )


def test_criterion_7_noise_robustness_protocol():
    """Noise sweep runs end to end; the zero row is bit-identical to the
    clean run, auxiliary growth is exact, the target is untouched."""
    records = _medium_records()
    fractions = (0.0, 0.1, 0.2, 0.3, 0.4)
    config = RunConfig(
        behaviors=TOY_BEHAVIORS, k_values=(10, 50), split_seed=2,
        noise_fractions=fractions, noise_seed=4,
    )
    clean = run_experiment(config, records=records)
    schema = mbrec.BehaviorSchema(TOY_BEHAVIORS)
    train = leave_one_out_split(ingest(records, schema), 2).train
    for fraction in fractions:
        noisy = inject_noise(train, NoiseConfig(fraction, 4))
        for b in range(schema.target_index):
            expected = train.nnz(b) + int(fraction * train.nnz(b))
            assert noisy.nnz(b) == expected
            assert noisy.matrix(b).multiply(train.matrix(b)).nnz == train.nnz(b)
        assert (noisy.target_matrix != train.target_matrix).nnz == 0
    sweep = run_noise_sweep(config, records=records)
    assert [f for f, _ in sweep] == list(fractions)
    assert sweep[0][1].ranks == clean.ranks
    assert sweep[0][1].report == clean.report
    for _, result in sweep:
        assert result.report.n_users == clean.report.n_users
    _announce(7)


_PUBLIC_TARGETS = {
    # env var -> (dataset name, published recall@10 to land within +-15%)
    "MBREC_BEIBEI_TSV": ("beibei", 0.4887),
    "MBREC_TAOBAO_TSV": ("taobao", 0.4025),
    "MBREC_IJCAI_TSV": ("ijcai", 0.1971),
}


@pytest.mark.parametrize("env_var", sorted(_PUBLIC_TARGETS))
def test_criterion_8_public_dataset_reproduction(env_var):
    """Optional: reproduce published recall@10 within +-15% relative on a
    public dataset supplied via environment variable. Deviation emits an
    investigation warning instead of failing the build."""
    path = os.environ.get(env_var)
    if not path:
        pytest.skip(f"{env_var} not set; external data unavailable")
    name, target = _PUBLIC_TARGETS[env_var]
    behaviors = (
        ("view", "favorite", "cart", "purchase")
        if name == "ijcai"
        else ("view", "cart", "purchase")
    )
    config = RunConfig(
        input=path, behaviors=behaviors, k_values=(10, 50), split_seed=1
    )
    result = run_experiment(config)
    recall = result.report.recall[10]
    if abs(recall - target) > 0.15 * target:
        warnings.warn(
            f"{name}: recall@10 {recall:.4f} outside +-15% of {target} "
            "(preprocessing differences are the usual cause; investigate)"
        )
    _announce(8, f"({name} recall@10={recall:.4f})")
