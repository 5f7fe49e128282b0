""" Deep Ensemble reference intervals: member-prediction quantiles and cross-member variance """

import numpy as np
import pandas as pd

from .coverage import Oracle, coverage_indicator, oracle_values
from .wasserstein import RESULT_COLUMNS
from ..data.dataset import Dataset
from ..net.model import MlpModel, forward_batch

# Ensemble rows do not depend on k
ENSEMBLE_K = 0
QUANTILE_METHOD = "linear"


def _check_members(models: list[MlpModel]) -> None:
    if len(models) < 2:
        raise ValueError(f"an ensemble needs at least 2 members, got {len(models)}")


def member_predictions(models: list[MlpModel], X: np.ndarray) -> np.ndarray:
    """(B, n) matrix of member outputs"""
    _check_members(models)
    return np.stack([forward_batch(model, X) for model in models])


def quantile_bounds(level: float) -> tuple[float, float]:
    tail = 0.5 * (1.0 - level)
    return tail, 1.0 - tail


def ensemble_interval(models: list[MlpModel], x: np.ndarray, level: float = 0.95) -> tuple[float, float]:
    """2.5% / 97.5% quantiles of member predictions at x under linear interpolation between order statistics"""
    predictions = member_predictions(models, np.atleast_2d(x))[:, 0]
    lo, hi = np.quantile(predictions, quantile_bounds(level), method=QUANTILE_METHOD)
    return float(lo), float(hi)


def ensemble_quantile_coverage(models: list[MlpModel], test_points: Dataset, oracle: Oracle, level: float = 0.95) -> float:
    predictions = member_predictions(models, test_points.X)
    lo, hi = np.quantile(predictions, quantile_bounds(level), axis=0, method=QUANTILE_METHOD)
    targets = oracle_values(oracle, test_points.X)
    return float(np.mean((targets >= lo) & (targets <= hi)))


def ensemble_variance_coverage(models: list[MlpModel], test_points: Dataset, oracle: Oracle, level: float = 0.95) -> float:
    """Coverage of mean +/- z * (unbiased cross-member std)"""
    predictions = member_predictions(models, test_points.X)
    sigma = predictions.std(axis=0, ddof=1)
    targets = oracle_values(oracle, test_points.X)
    return float(np.mean(coverage_indicator(targets, predictions.mean(axis=0), sigma, level)))


def ensemble_rows(
    models: list[MlpModel], test_points: Dataset, oracle: Oracle, level: float = 0.95, seed: int | None = None
) -> pd.DataFrame:
    """k-independent reference rows for coverage tables"""
    rows = []
    for method, fn in (
        ("deep_ensemble_variance", ensemble_variance_coverage),
        ("deep_ensemble_quantile", ensemble_quantile_coverage),
    ):
        rate = fn(models, test_points, oracle, level)
        stderr = float(np.sqrt(rate * (1.0 - rate) / test_points.n))
        rows.append([method, ENSEMBLE_K, seed, "coverage", rate, stderr])
    return pd.DataFrame(rows, columns=RESULT_COLUMNS)
