""" Script to measure empirical coverage of Laplace credible intervals against an oracle function """

import logging
import numpy as np
import pandas as pd
from collections.abc import Callable
from dataclasses import dataclass, field
from scipy.stats import norm

from .wasserstein import RESULT_COLUMNS, VarianceKind, gradients_at_points, predictive_std
from ..data.dataset import Dataset
from ..laplace.system import LaplaceSystem, full_epistemic_variances, subset_epistemic_variances
from ..net.model import MlpModel, forward_batch
from ..select.selection import SubsetSelection

FULL_METHOD_LABEL = "full"

# Maps an (n, d) batch of inputs to n target values
Oracle = Callable[[np.ndarray], np.ndarray]


def z_score(level: float) -> float:
    """Two-sided normal quantile rounded to two decimals, 1.96 at the 95% level"""
    if not 0 < level < 1:
        raise ValueError(f"coverage level must lie in (0, 1), got {level}")
    return round(float(norm.ppf(0.5 + level / 2)), 2)


@dataclass(frozen=True)
class CoverageRecord:
    test_index: int
    oracle_value: float
    map_value: float
    sigma_method: float
    level: float = 0.95
    covered: bool = field(init=False)

    def __post_init__(self):
        covered = abs(self.oracle_value - self.map_value) <= z_score(self.level) * self.sigma_method
        object.__setattr__(self, "covered", bool(covered))


def coverage_indicator(oracle_values: np.ndarray, map_values: np.ndarray, sigma: np.ndarray, level: float = 0.95) -> np.ndarray:
    return np.abs(np.asarray(oracle_values) - np.asarray(map_values)) <= z_score(level) * np.asarray(sigma)


def oracle_values(oracle: Oracle, X: np.ndarray) -> np.ndarray:
    values = np.asarray(oracle(X), dtype=np.float64).reshape(-1)
    if values.shape[0] != X.shape[0]:
        raise ValueError(f"oracle returned {values.shape[0]} values for {X.shape[0]} test points")
    if not np.all(np.isfinite(values)):
        raise ValueError("oracle is not finite on every test point")
    return values


def coverage_rate(covered: np.ndarray) -> tuple[float, float]:
    """Empirical coverage and its binomial standard error"""
    rate = float(np.mean(covered))
    return rate, float(np.sqrt(rate * (1.0 - rate) / covered.shape[0]))


def coverage_records(
    sys: LaplaceSystem,
    selection: SubsetSelection,
    test_points: Dataset,
    model: MlpModel,
    oracle: Oracle,
    level: float = 0.95,
    kind: VarianceKind = VarianceKind.EPISTEMIC,
) -> list[CoverageRecord]:
    G_star = gradients_at_points(model, test_points)
    sigma = predictive_std(sys, subset_epistemic_variances(sys, selection, G_star), kind)
    targets = oracle_values(oracle, test_points.X)
    means = forward_batch(model, test_points.X)
    return [
        CoverageRecord(i, float(o), float(m), float(s), level) for i, (o, m, s) in enumerate(zip(targets, means, sigma))
    ]


def coverage_sweep(
    sys: LaplaceSystem,
    selections: list[SubsetSelection],
    test_points: Dataset,
    model: MlpModel,
    oracle: Oracle,
    level: float = 0.95,
    kind: VarianceKind = VarianceKind.EPISTEMIC,
    include_full: bool = True,
    seed: int | None = None,
) -> pd.DataFrame:
    """Empirical coverage per selection, plus a `full` row for the full-Laplace posterior when include_full is set"""
    G_star = gradients_at_points(model, test_points)
    targets = oracle_values(oracle, test_points.X)
    means = forward_batch(model, test_points.X)
    rows = []
    if include_full:
        sigma = predictive_std(sys, full_epistemic_variances(sys, G_star), kind)
        rate, stderr = coverage_rate(coverage_indicator(targets, means, sigma, level))
        rows.append([FULL_METHOD_LABEL, sys.p, seed, "coverage", rate, stderr])
    for selection in selections:
        sigma = predictive_std(sys, subset_epistemic_variances(sys, selection, G_star), kind)
        rate, stderr = coverage_rate(coverage_indicator(targets, means, sigma, level))
        rows.append([selection.method.label, selection.k, seed, "coverage", rate, stderr])
        logging.debug(f"coverage {selection.method.label} k={selection.k}: {rate:.4f}")
    return pd.DataFrame(rows, columns=RESULT_COLUMNS)
