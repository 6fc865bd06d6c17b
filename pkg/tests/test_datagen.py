import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pansr.datagen import (
    DatasetSpec,
    GenerationError,
    friedman_scenario,
    generate,
    read_dataset,
    rows_for,
    split_indices,
    train_test_split,
    write_dataset,
)
from pansr.expr import EquationSpec, evaluate_batch, get_equation, variables_used


def test_noiseless_response_is_exact():
    d = generate(DatasetSpec("friedman", n=200, seed=1))
    f = evaluate_batch(get_equation("friedman").expression, d.X[:, :5])
    np.testing.assert_array_equal(d.y, f)
    assert d.meta["sigma_eps2"] == 0.0


def test_column_count_with_irrelevant_copies():
    d = generate(DatasetSpec("I.38.12", n=50, s=50))
    assert d.p == 204 and d.S0 == (0, 1, 2, 3)


def test_irrelevant_copies_follow_bounds_and_order():
    eq = EquationSpec("toy", "x1 + x2", ((0, 1), (10, 20)))
    d = generate(DatasetSpec(eq, n=500, s=3, seed=2))
    assert d.p == 8
    assert np.all((d.X[:, 2:5] >= 0) & (d.X[:, 2:5] <= 1))
    assert np.all((d.X[:, 5:8] >= 10) & (d.X[:, 5:8] <= 20))


def test_noise_level_matches_snr():
    d = generate(DatasetSpec("friedman", n=10_000, snr=10, seed=3))
    eps = d.y - d.signal
    assert 0.08 <= eps.var() / d.meta["sigma_f2"] <= 0.12
    assert d.meta["sigma_f2"] == pytest.approx(np.var(d.signal, ddof=1))


@settings(max_examples=10, deadline=None)
@given(st.sampled_from(["friedman", "sum-product", "I.12.11", "II.11.28"]),
       st.sampled_from([0.5, 1.0, 2.0, 10.0, 20.0]), st.integers(0, 2**31))
def test_empirical_snr_calibration(name, snr, seed):
    d = generate(DatasetSpec(name, n=10_000, snr=snr, seed=seed))
    empirical = np.var(d.signal, ddof=1) / np.var(d.y - d.signal, ddof=1)
    assert abs(empirical - snr) / snr <= 0.1


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 2**31))
def test_irrelevant_columns_uncorrelated_with_response(seed):
    d = generate(DatasetSpec("friedman", n=10_000, s=4, snr=10, seed=seed))
    corr = [abs(np.corrcoef(d.X[:, j], d.y)[0, 1]) for j in range(5, d.p)]
    assert max(corr) <= 0.1


@pytest.mark.parametrize("name", ["friedman", "sum-product", "poly-cubic", "I.38.12", "I.6.2a"])
def test_relevant_columns_cover_equation_variables(name):
    d = generate(DatasetSpec(name, n=5, s=2))
    assert variables_used(get_equation(name).expression) <= set(d.S0)


def test_seed_determinism():
    a = generate(DatasetSpec("I.10.7", n=100, s=3, snr=5, seed=9))
    b = generate(DatasetSpec("I.10.7", n=100, s=3, snr=5, seed=9))
    np.testing.assert_array_equal(a.X, b.X)
    np.testing.assert_array_equal(a.y, b.y)
    c = generate(DatasetSpec("I.10.7", n=100, s=3, snr=5, seed=10))
    assert not np.array_equal(a.X, c.X)


def test_dataset_is_read_only():
    d = generate(DatasetSpec("friedman", n=10))
    with pytest.raises(ValueError):
        d.X[0, 0] = 1.0


@pytest.mark.parametrize("kwargs", [dict(n=0), dict(s=-1), dict(snr=0.0), dict(scenario="bogus")])
def test_invalid_spec(kwargs):
    base = dict(equation="friedman", n=10)
    with pytest.raises(ValueError):
        DatasetSpec(**{**base, **kwargs})


def test_undefined_rows_are_resampled():
    eq = EquationSpec("halfline", "log(x1)", ((-1, 1),))
    d = generate(DatasetSpec(eq, n=300, seed=0))
    assert np.all(d.X[:, 0] > 0)


def test_always_undefined_raises():
    eq = EquationSpec("never", "sqrt(x1)", ((-2, -1),))
    with pytest.raises(GenerationError):
        generate(DatasetSpec(eq, n=5))


# Friedman scenarios ------------------------------------------------------

def test_duplicated_column():
    d = friedman_scenario("duplicatedX", n=100, p=10, seed=1)
    assert d.p == 10 and d.S0 == (0, 1, 2, 3, 4)
    np.testing.assert_array_equal(d.X[:, 5], d.X[:, 0] + d.X[:, 1])


def test_correlated_copula():
    d = friedman_scenario("correlatedX", n=10_000, p=8, seed=2)
    assert np.all((d.X > 0) & (d.X < 1))
    # Spearman-to-Pearson map for a Gaussian copula with uniform marginals
    expected = 6 / math.pi * math.asin(0.9 / 2)
    r = np.corrcoef(d.X[:, 0], d.X[:, 1])[0, 1]
    assert r == pytest.approx(0.9, abs=0.05)
    assert r == pytest.approx(expected, abs=0.01)
    r13 = np.corrcoef(d.X[:, 0], d.X[:, 2])[0, 1]
    assert r13 == pytest.approx(6 / math.pi * math.asin(0.81 / 2), abs=0.015)


def test_noisy_predictors_but_clean_signal():
    d = friedman_scenario("noisyX", n=20_000, p=6, snr=10, seed=3)
    clean = evaluate_batch(get_equation("friedman").expression, np.clip(d.X[:, :5], 0, 1))
    assert not np.allclose(clean, d.signal)
    # each column is Unif(0,1) plus N(0, 1/60)
    assert np.var(d.X, axis=0) == pytest.approx(np.full(6, 1 / 12 + 1 / 60), rel=0.05)


def test_baseline_alias_and_bounds():
    d = friedman_scenario("baseline", n=100, p=100, seed=4)
    assert d.p == 100 and d.meta["scenario"] == "standard"
    with pytest.raises(ValueError):
        friedman_scenario("duplicatedX", n=10, p=5)


def test_spec_dispatches_scenarios():
    d = generate(DatasetSpec("friedman", n=50, s=19, scenario="duplicatedX", seed=1))
    assert d.p == 100
    np.testing.assert_array_equal(d.X[:, 5], d.X[:, 0] + d.X[:, 1])


# splitting ---------------------------------------------------------------

def test_split_sizes_and_disjointness():
    tr, te = split_indices(100_000, 1000, seed=0)
    assert len(tr) == 1000 and len(te) == 333
    assert not set(tr) & set(te)


def test_split_boundary_no_subsampling():
    tr, te = split_indices(1000, 750, seed=1)
    assert len(tr) == 750 and len(te) == 250
    assert len(set(tr) | set(te)) == 1000


def test_split_deterministic():
    a = split_indices(5000, 1000, seed=3)
    b = split_indices(5000, 1000, seed=3)
    for u, v in zip(a, b):
        np.testing.assert_array_equal(u, v)


def test_split_insufficient_rows():
    with pytest.raises(ValueError):
        split_indices(100, 80)


@given(st.integers(1, 5000))
def test_rows_for_is_sufficient(n):
    tr, te = split_indices(rows_for(n), n)
    assert len(tr) == n and len(te) == n // 3


def test_train_test_split_datasets():
    d = generate(DatasetSpec("friedman", n=rows_for(300), s=1, seed=5))
    train, test = train_test_split(d, 300, seed=5)
    assert (train.n, test.n) == (300, 100)
    assert train.S0 == d.S0


def test_columns_reindexes_oracle():
    d = generate(DatasetSpec("sum-product", n=20, s=2))
    sub = d.columns([4, 0, 2])
    assert sub.S0 == (1, 2)
    np.testing.assert_array_equal(sub.X[:, 0], d.X[:, 4])


# files -------------------------------------------------------------------

def test_csv_round_trip(tmp_path):
    d = generate(DatasetSpec("I.12.2", n=30, s=1, snr=2, seed=6))
    path = write_dataset(d, tmp_path / "d.csv")
    header = path.read_text().splitlines()[0]
    assert header == ",".join([f"x{j}" for j in range(1, d.p + 1)] + ["target"])
    back = read_dataset(path)
    np.testing.assert_array_equal(back.X, d.X)
    np.testing.assert_array_equal(back.y, d.y)
    assert back.S0 == d.S0 and back.meta["snr"] == 2


def test_csv_without_sidecar(tmp_path):
    path = tmp_path / "plain.csv"
    path.write_text("x1,x2,target\n1,2,3\n4,5,6\n")
    d = read_dataset(path)
    assert d.X.shape == (2, 2) and d.S0 == ()
