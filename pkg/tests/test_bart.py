import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import multivariate_normal

from pansr.bart import (
    BartConfig,
    BartPosterior,
    DegenerateResponseError,
    RegressionTree,
    fit_bart,
    predict,
    vip,
)

DESK = BartConfig(burn_in=500, num_draws=500)


def friedman(X):
    return (10 * np.sin(np.pi * X[:, 0] * X[:, 1]) + 20 * (X[:, 2] - 0.5) ** 2
            + 10 * X[:, 3] + 5 * X[:, 4])


def r2(y, yhat):
    return 1 - np.sum((y - yhat) ** 2) / np.sum((y - y.mean()) ** 2)


@pytest.fixture(scope="module")
def friedman_fit():
    rng = np.random.default_rng(11)
    X = rng.uniform(0, 1, (1250, 5))
    y = friedman(X)
    post = fit_bart(X[:1000], y[:1000], BartConfig(seed=3), X_test=X[1000:])
    return X, y, post


# config ------------------------------------------------------------------

@pytest.mark.parametrize("bad", [
    dict(num_trees=0), dict(num_draws=0), dict(alpha=1.0), dict(alpha=0.0), dict(beta=-1),
    dict(move_probs=(0.5, 0.5, 0.0)), dict(move_probs=(0.3, 0.3, 0.3)),
])
def test_config_rejects_invalid(bad):
    with pytest.raises(ValueError):
        BartConfig(**bad)


def test_config_defaults():
    cfg = BartConfig()
    assert (cfg.num_trees, cfg.burn_in, cfg.num_draws) == (20, 1000, 1000)
    assert cfg.tau == pytest.approx(0.5 / (2 * np.sqrt(20)))


# fitting -----------------------------------------------------------------

def test_linear_target_train_r2():
    rng = np.random.default_rng(0)
    X = rng.uniform(0, 1, (200, 1))
    post = fit_bart(X, X[:, 0], DESK)
    assert r2(X[:, 0], post.train_predictions) >= 0.95


def test_constant_response_rejected():
    X = np.random.default_rng(0).uniform(size=(20, 2))
    with pytest.raises(DegenerateResponseError):
        fit_bart(X, np.full(20, 3.0), DESK)


@pytest.mark.parametrize("X, y", [
    (np.full((20, 1), np.nan), np.arange(20.0)),
    (np.ones((5, 1)), np.arange(5.0)),
    (np.ones((20, 1)), np.arange(19.0)),
])
def test_bad_inputs_rejected(X, y):
    with pytest.raises(ValueError):
        fit_bart(X, y, DESK)


def test_friedman_heldout_r2(friedman_fit):
    X, y, post = friedman_fit
    assert r2(y[1000:], post.test_predictions) >= 0.90


def test_posterior_invariants(friedman_fit):
    _, _, post = friedman_fit
    assert post.num_draws == post.config.num_draws
    assert np.all(post.sigma2 > 0)
    np.testing.assert_array_equal(post.split_counts.sum(axis=1), post.total_splits)
    for d in (0, post.num_draws - 1):
        trees = [post.trees.tree(d, t) for t in range(post.config.num_trees)]
        np.testing.assert_array_equal(sum(t.split_counts(5) for t in trees), post.split_counts[d])


def test_cutpoints_within_observed_range(friedman_fit):
    X, _, post = friedman_fit
    td = post.trees
    inner = td.var >= 0
    lo = X[:1000].min(axis=0)[td.var[inner]]
    hi = X[:1000].max(axis=0)[td.var[inner]]
    assert np.all((td.threshold[inner] >= lo) & (td.threshold[inner] < hi))


def test_predict_matches_train_cache(friedman_fit):
    X, _, post = friedman_fit
    np.testing.assert_array_equal(predict(post, X[:1000]), post.train_predictions)


def test_predict_dimension_mismatch(friedman_fit):
    _, _, post = friedman_fit
    with pytest.raises(ValueError):
        predict(post, np.zeros((3, 4)))


def test_seed_determinism():
    rng = np.random.default_rng(5)
    X = rng.uniform(size=(100, 4))
    y = X[:, 0] + rng.normal(0, 0.1, 100)
    cfg = BartConfig(burn_in=100, num_draws=100, seed=9)
    a, b = fit_bart(X, y, cfg), fit_bart(X, y, cfg)
    np.testing.assert_array_equal(a.sigma2, b.sigma2)
    np.testing.assert_array_equal(a.split_counts, b.split_counts)
    np.testing.assert_array_equal(a.train_predictions, b.train_predictions)
    c = fit_bart(X, y, cfg.replace(seed=10))
    assert not np.array_equal(a.sigma2, c.sigma2)


def test_column_permutation_equivariance():
    rng = np.random.default_rng(8)
    X = rng.uniform(size=(80, 6))
    y = X[:, 1] - X[:, 4] + rng.normal(0, 0.1, 80)
    cfg = BartConfig(burn_in=100, num_draws=100, seed=2)
    perm = rng.permutation(6)
    a = fit_bart(X, y, cfg)
    b = fit_bart(X[:, perm], y, cfg)
    np.testing.assert_array_equal(a.split_counts[:, perm], b.split_counts)
    np.testing.assert_array_equal(a.sigma2, b.sigma2)


def test_constant_columns_never_split():
    rng = np.random.default_rng(1)
    X = np.column_stack([np.ones(50), rng.uniform(size=50)])
    post = fit_bart(X, X[:, 1] ** 2, BartConfig(burn_in=50, num_draws=50))
    assert post.split_counts[:, 0].sum() == 0


def test_json_dump(tmp_path, friedman_fit):
    _, _, post = friedman_fit
    path = tmp_path / "post.json"
    post.dump_json(path)
    data = json.loads(path.read_text())
    assert len(data["sigma2"]) == post.num_draws
    assert np.array_equal(np.array(data["split_counts"]), post.split_counts)


# hand-built ensembles ----------------------------------------------------

def test_stump_ensemble_is_constant():
    trees = [RegressionTree.stump(v) for v in (0.1, -0.3, 0.05)]
    post = BartPosterior.from_trees([trees], n_features=2, y_min=10.0, y_range=4.0)
    out = predict(post, np.random.default_rng(0).uniform(size=(7, 2)))
    np.testing.assert_allclose(out, (0.1 - 0.3 + 0.05 + 0.5) * 4.0 + 10.0, rtol=1e-15)
    assert np.ptp(out) == 0


def test_single_split_step_function():
    post = BartPosterior.from_trees([[RegressionTree.split(0, 0.5, -1.0, 1.0)]], n_features=1)
    x = np.array([[0.0], [0.49], [0.5], [0.5000001], [1.0]])
    np.testing.assert_array_equal(predict(post, x), [-1.0, -1.0, -1.0, 1.0, 1.0])


def test_tree_validation():
    with pytest.raises(ValueError):
        RegressionTree((0, -1, -1), (0.5, 0, 0), (1, -1, -1), (1, -1, -1), (0, 1, 2))
    with pytest.raises(ValueError):
        RegressionTree.stump(float("nan"))
    assert RegressionTree.split(0, 0.5, 1, 2).parent == (-1, 0, 0)


# variable inclusion proportions ------------------------------------------

def test_vip_single_feature():
    post = BartPosterior.from_trees([[RegressionTree.split(0, 0.5, 0, 1)]] * 3, n_features=4)
    np.testing.assert_array_equal(vip(post), [1, 0, 0, 0])


def test_vip_hand_example():
    two_one = RegressionTree((0, 1, -1, -1, -1), (0.5, 0.5, 0, 0, 0), (1, 3, -1, -1, -1),
                             (2, 4, -1, -1, -1), (0, 0, 1, 2, 3))
    draw_a = [two_one, two_one]  # x1: 2, x2: 2
    x1_twice = RegressionTree((0, 0, -1, -1, -1), (0.5, 0.2, 0, 0, 0), (1, 3, -1, -1, -1),
                              (2, 4, -1, -1, -1), (0, 0, 1, 2, 3))
    draw_b = [x1_twice, x1_twice]  # x1: 4
    post = BartPosterior.from_trees([draw_a, draw_b], n_features=2)
    np.testing.assert_array_equal(post.split_counts, [[2, 2], [4, 0]])
    np.testing.assert_allclose(vip(post), [0.75, 0.25])


def test_vip_zero_split_draw_contributes_zero():
    post = BartPosterior.from_trees([[RegressionTree.stump(0)], [RegressionTree.split(1, 0, 0, 0)]],
                                    n_features=2)
    np.testing.assert_allclose(vip(post), [0, 0.5])


def test_vip_bounds(friedman_fit):
    _, _, post = friedman_fit
    q = vip(post)
    assert np.all((q >= 0) & (q <= 1))
    assert q.sum() == pytest.approx(1.0)
    assert q[:5].min() > 0


# sampler correctness -----------------------------------------------------

def _two_value_problem():
    x = np.repeat([0.0, 1.0], 5)[:, None]
    y = np.array([0.0, 0.5, 0.1, 0.8, 0.3, 0.45, 0.25, 1.0, 0.6, 0.4])
    return x, y


def test_detailed_balance_two_value_design():
    # one tree, fixed noise, and a single possible rule: the chain alternates
    # between the stump and one split, so its stationary law is known exactly
    x, y = _two_value_problem()
    ys = (y - y.min()) / np.ptp(y) - 0.5
    sigma2, alpha = 0.05, 0.5
    cfg = BartConfig(num_trees=1, burn_in=200, num_draws=60000, alpha=alpha,
                     fixed_sigma2=sigma2, seed=4, keep_trees=False)
    tau2 = cfg.tau ** 2

    def marginal(block):
        cov = sigma2 * np.eye(len(block)) + tau2 * np.ones((len(block), len(block)))
        return multivariate_normal(np.zeros(len(block)), cov).logpdf(block)

    log_stump = np.log(1 - alpha) + marginal(ys)
    log_split = np.log(alpha) + marginal(ys[:5]) + marginal(ys[5:])
    p_split = 1 / (1 + np.exp(log_stump - log_split))
    assert 0.2 < p_split < 0.8

    post = fit_bart(x, y, cfg)
    freq = post.split_counts[:, 0].mean()
    assert freq == pytest.approx(p_split, abs=0.02)

    # grow from the stump and its reverse prune carry reciprocal MH ratios
    ratio = np.exp(log_split - log_stump) * cfg.move_probs[1]
    acc = post.acceptance
    prune_rate = acc["prune"]["accepted"] / acc["prune"]["proposed"]
    assert prune_rate == pytest.approx(min(1.0, 1 / ratio), abs=0.02)
    stump_visits = acc["grow"]["proposed"] - cfg.move_probs[0] * p_split * 60200
    grow_rate = acc["grow"]["accepted"] / stump_visits
    assert grow_rate == pytest.approx(min(1.0, ratio), abs=0.03)


@settings(max_examples=6, deadline=None)
@given(st.integers(0, 10_000), st.floats(1.0, 5.0))
def test_noise_variance_recovery(seed, sigma):
    rng = np.random.default_rng(seed)
    X = rng.uniform(size=(1000, 5))
    y = friedman(X) + rng.normal(0, sigma, 1000)
    post = fit_bart(X, y, BartConfig(seed=seed, keep_trees=False))
    assert 0.5 <= np.median(post.sigma2) / sigma ** 2 <= 2.0


def test_relevant_features_dominate_vip():
    rng = np.random.default_rng(21)
    X = rng.uniform(size=(500, 20))
    y = friedman(X) + rng.normal(0, 1, 500)
    q = vip(fit_bart(X, y, BartConfig(seed=1, keep_trees=False)))
    assert q[:5].mean() > q[5:].max()
