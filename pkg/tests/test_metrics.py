import numpy as np
import pandas as pd
import pytest
from functools import partial

from sublaplace.data.dataset import Dataset
from sublaplace.laplace.system import full_epistemic_variances
from sublaplace.metrics.coverage import (
    CoverageRecord,
    coverage_indicator,
    coverage_rate,
    coverage_records,
    coverage_sweep,
    z_score,
)
from sublaplace.metrics.ensemble import (
    ENSEMBLE_K,
    ensemble_interval,
    ensemble_quantile_coverage,
    ensemble_rows,
    ensemble_variance_coverage,
)
from sublaplace.metrics.wasserstein import (
    RESULT_COLUMNS,
    VarianceKind,
    WassersteinRecord,
    gradients_at_points,
    predictive_std,
    subsample_test_points,
    w2_gap,
    wasserstein_sweep,
)
from sublaplace.net.model import Activation, LayerSpec, MlpModel, forward_batch
from sublaplace.select.selection import SelectionMethod, SubsetSelection
from sublaplace.utils.linalg import NumericError


def constant_model(value, d=2):
    return MlpModel((LayerSpec(d, 1, Activation.IDENTITY),), np.concatenate([np.zeros(d), [value]]))


def make_points(n=12, d=3, seed=0):
    rng = np.random.default_rng(seed)
    return Dataset(rng.standard_normal((n, d)), np.zeros(n))


def test_w2_gap_is_symmetric_and_zero_iff_equal():
    assert w2_gap(1.5, 1.5) == 0.0
    assert w2_gap(1.0, 3.0) == w2_gap(3.0, 1.0) == 2.0
    assert WassersteinRecord(0, 2.0, 0.5).w2 == 1.5
    with pytest.raises(ValueError):
        WassersteinRecord(0, -1.0, 0.5)


def test_full_selection_has_no_gap(small_system, small_model):
    full = SubsetSelection(tuple(range(small_system.p)))
    frame = wasserstein_sweep(small_system, [full], make_points(), small_model, seed=3)
    assert list(frame.columns) == RESULT_COLUMNS
    assert frame.loc[0, "value"] == pytest.approx(0.0, abs=1e-8)
    assert frame.loc[0, "seed"] == 3 and frame.loc[0, "metric"] == "w2"


def test_nested_subsets_shrink_the_gap(small_system, small_model, small_data):
    rng = np.random.default_rng(1)
    order = rng.permutation(small_system.p)
    nested = [SubsetSelection(tuple(order[:k]), SelectionMethod.EXPLICIT) for k in (5, 15, 40)]
    frame = wasserstein_sweep(small_system, nested, small_data, small_model)
    values = frame["value"].to_numpy()
    assert np.all(np.diff(values) <= 1e-12)
    assert list(frame["k"]) == [5, 15, 40]


def test_predictive_std_kinds(small_system):
    epistemic = np.array([0.0, 1.0])
    assert np.allclose(predictive_std(small_system, epistemic, VarianceKind.EPISTEMIC), [0.0, 1.0])
    assert np.allclose(predictive_std(small_system, epistemic, VarianceKind.TOTAL), np.sqrt([0.25, 1.25]))


def test_subsample_is_seeded_and_sorted():
    ds = make_points(n=30)
    sub, indices = subsample_test_points(ds, 10, seed=4)
    again, same = subsample_test_points(ds, 10, seed=4)
    assert sub.n == 10 and np.array_equal(indices, same)
    assert np.all(np.diff(indices) > 0)
    assert np.array_equal(sub.X, ds.X[indices])
    whole, all_indices = subsample_test_points(ds, None, seed=4)
    assert whole is ds and np.array_equal(all_indices, np.arange(30))


def test_non_finite_gradient_names_the_test_point(small_model):
    blown_up = small_model.with_theta(np.full(small_model.p, 1e200))
    with pytest.raises(NumericError, match="test index 0"):
        gradients_at_points(blown_up, np.ones((2, 3)))


def test_z_score():
    assert z_score(0.95) == 1.96
    assert z_score(0.9) == 1.64
    with pytest.raises(ValueError):
        z_score(1.0)


def test_coverage_indicator_trivial_cases():
    oracle = np.array([1.0, 2.0, 3.0])
    means = oracle + 0.5
    assert not coverage_indicator(oracle, means, np.zeros(3)).any()
    assert coverage_indicator(oracle, oracle, np.zeros(3)).all()
    assert coverage_rate(np.array([True, False, True, True])) == (0.75, pytest.approx(np.sqrt(0.75 * 0.25 / 4)))
    assert CoverageRecord(0, 1.0, 0.0, 1.0).covered
    assert not CoverageRecord(0, 2.0, 0.0, 1.0).covered


def test_coverage_is_monotone_in_sigma():
    rng = np.random.default_rng(2)
    oracle, means, sigma = rng.standard_normal(200), rng.standard_normal(200), rng.uniform(0.1, 1.0, 200)
    rates = [coverage_rate(coverage_indicator(oracle, means, c * sigma))[0] for c in (0.5, 1.0, 2.0, 4.0)]
    assert rates == sorted(rates)


def test_map_oracle_is_always_covered(small_system, small_model):
    selections = [SubsetSelection(tuple(range(10)), SelectionMethod.LAST_K)]
    frame = coverage_sweep(small_system, selections, make_points(), small_model, partial(forward_batch, small_model))
    assert list(frame["method"]) == ["full", "last_k"]
    assert list(frame["k"]) == [small_system.p, 10]
    assert np.all(frame["value"] == 1.0)


def test_shifted_oracle_matches_record_view(small_system, small_model):
    points = make_points(n=20)
    selection = SubsetSelection(tuple(range(30)))

    def oracle(X):
        return forward_batch(small_model, X) + 0.3

    frame = coverage_sweep(small_system, [selection], points, small_model, oracle, include_full=False)
    records = coverage_records(small_system, selection, points, small_model, oracle)
    assert len(frame) == 1
    assert frame.loc[0, "value"] == pytest.approx(np.mean([r.covered for r in records]))
    sigma = np.sqrt(full_epistemic_variances(small_system, gradients_at_points(small_model, points)))
    assert all(r.sigma_method <= s + 1e-12 for r, s in zip(records, sigma))


def test_oracle_must_cover_every_point(small_system, small_model):
    with pytest.raises(ValueError):
        coverage_sweep(small_system, [], make_points(), small_model, lambda X: np.zeros(3))


def test_ensemble_quantile_interval():
    assert ensemble_interval([constant_model(3.0)] * 4, np.zeros(2)) == (3.0, 3.0)
    lo, hi = ensemble_interval([constant_model(v) for v in (1.0, 2.0, 3.0, 4.0)], np.zeros(2))
    assert lo == pytest.approx(1.075) and hi == pytest.approx(3.925)
    with pytest.raises(ValueError):
        ensemble_interval([constant_model(1.0)], np.zeros(2))


def test_ensemble_variance_coverage():
    points = make_points(n=5, d=2)
    identical = [constant_model(3.0), constant_model(3.0)]
    assert ensemble_variance_coverage(identical, points, lambda X: np.full(len(X), 2.0)) == 0.0
    assert ensemble_variance_coverage(identical, points, lambda X: np.full(len(X), 3.0)) == 1.0
    symmetric = [constant_model(1.0), constant_model(3.0)]
    assert ensemble_variance_coverage(symmetric, points, lambda X: np.full(len(X), 2.0)) == 1.0
    assert ensemble_quantile_coverage(symmetric, points, lambda X: np.full(len(X), 2.0)) == 1.0
    assert ensemble_quantile_coverage(symmetric, points, lambda X: np.full(len(X), 3.5)) == 0.0


def test_ensemble_rows_are_k_independent():
    members = [constant_model(1.0), constant_model(3.0)]
    frame = ensemble_rows(members, make_points(n=4, d=2), lambda X: np.full(len(X), 2.0), seed=1)
    assert isinstance(frame, pd.DataFrame)
    assert list(frame["method"]) == ["deep_ensemble_variance", "deep_ensemble_quantile"]
    assert set(frame["k"]) == {ENSEMBLE_K}
