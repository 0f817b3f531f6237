import numpy as np
import pytest
from sklearn.base import clone

from mbrec import BehaviorPatternRecommender

from synth import random_dataset


@pytest.fixture
def fitted():
    ds = random_dataset(51, n_users=15, n_items=10, n_behaviors=3, density=0.25)
    est = BehaviorPatternRecommender(alpha=1, epsilon=1.0, chunk_size=4)
    return ds, est.fit(ds)


def test_get_params_round_trip():
    est = BehaviorPatternRecommender(alpha=2, epsilon=0.5, mode="raw")
    params = est.get_params()
    assert params["alpha"] == 2
    assert params["epsilon"] == 0.5
    assert params["mode"] == "raw"
    rebuilt = BehaviorPatternRecommender(**params)
    assert rebuilt.get_params() == params


def test_sklearn_clone_preserves_params():
    est = BehaviorPatternRecommender(alpha=1, chunk_size=7, share_prefixes=True)
    cloned = clone(est)
    assert cloned.get_params() == est.get_params()


def test_set_params_chains():
    est = BehaviorPatternRecommender().set_params(mode="raw", epsilon=2.0)
    assert est.mode == "raw"
    assert est.epsilon == 2.0


def test_fit_returns_self_and_sets_state(fitted):
    ds, est = fitted
    assert est.train_ is ds
    assert len(est.patterns_) == 29
    assert est.weights_.log_odds.shape == (29,)
    assert est.norm_.mean.shape == (29,)


def test_unfitted_estimator_raises():
    est = BehaviorPatternRecommender()
    with pytest.raises(RuntimeError, match="fit"):
        est.recommend((0, 1), k=3)


def test_fit_rejects_non_dataset():
    with pytest.raises(TypeError):
        BehaviorPatternRecommender().fit(np.zeros((3, 3)))


def test_invalid_mode_caught_at_fit():
    ds = random_dataset(1, n_behaviors=2)
    with pytest.raises(ValueError):
        BehaviorPatternRecommender(mode="sigmoid").fit(ds)


def test_recommendations_exclude_target_positives(fitted):
    ds, est = fitted
    lists = est.recommend((0, ds.n_users), k=ds.n_items)
    target = ds.target_matrix
    for u, items in enumerate(lists):
        held = set(target.indices[target.indptr[u]:target.indptr[u + 1]].tolist())
        assert held.isdisjoint(items.tolist())
        assert len(items) == ds.n_items - len(held)


def test_chunk_size_does_not_change_scores():
    ds = random_dataset(52, n_users=17, n_items=12, n_behaviors=3, density=0.3)
    rows = np.arange(ds.n_users)
    outputs = []
    for chunk in (3, 1024):
        est = BehaviorPatternRecommender(chunk_size=chunk).fit(ds)
        outputs.append(est.score_rows(rows))
    assert (outputs[0] == outputs[1]).all()  # bit-identical


def test_n_jobs_does_not_change_scores():
    ds = random_dataset(53, n_users=14, n_items=9, n_behaviors=2, density=0.3)
    rows = np.arange(ds.n_users)
    serial = BehaviorPatternRecommender(chunk_size=5, n_jobs=1).fit(ds)
    parallel = BehaviorPatternRecommender(chunk_size=5, n_jobs=4).fit(ds)
    assert (serial.score_rows(rows) == parallel.score_rows(rows)).all()


def test_model_document_schema_and_record_keys(fitted):
    ds, est = fitted
    doc = est.to_document()
    assert set(doc) == {"epsilon", "alpha", "mode", "schema", "patterns"}
    label = est.patterns_.patterns[0].label(ds.schema)
    assert set(doc["patterns"][label]) == {
        "pos_sum", "neg_sum", "p_pos", "p_neg", "weight", "mean", "std"
    }
    assert len(doc["patterns"]) == len(est.patterns_)


def test_model_document_round_trip(tmp_path, fitted):
    ds, est = fitted
    path = tmp_path / "model.json"
    est.save(path)
    from mbrec import load_model

    doc = load_model(path)
    assert doc.schema.names == ds.schema.names
    assert doc.alpha == est.alpha
    assert doc.mode == est.mode
    assert doc.patterns == est.patterns_
    np.testing.assert_array_equal(doc.weights.log_odds, est.weights_.log_odds)
    np.testing.assert_array_equal(doc.norm.mean, est.norm_.mean)
    np.testing.assert_array_equal(doc.norm.std, est.norm_.std)


def test_score_users_matches_score_rows(fitted):
    ds, est = fitted
    block = est.score_users((2, 6))
    rows = est.score_rows(np.arange(2, 6))
    assert (block.scores == rows).all()
