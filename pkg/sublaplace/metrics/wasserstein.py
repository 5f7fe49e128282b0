""" Script to compare full and sub-network Laplace predictive standard deviations with the Wasserstein-2 gap """

import enum
import logging
import numpy as np
import pandas as pd
from dataclasses import dataclass, field

from ..data.dataset import Dataset
from ..laplace.system import LaplaceSystem, full_epistemic_variances, subset_epistemic_variances
from ..net.model import MlpModel, param_gradients
from ..select.selection import SubsetSelection
from ..utils.linalg import NumericError

RESULT_COLUMNS = ["method", "k", "seed", "metric", "value", "stderr"]


class VarianceKind(enum.Enum):
    EPISTEMIC = enum.auto()
    TOTAL = enum.auto()


@dataclass(frozen=True)
class WassersteinRecord:
    test_index: int
    sigma_full: float
    sigma_method: float
    w2: float = field(init=False)

    def __post_init__(self):
        if self.sigma_full < 0 or self.sigma_method < 0:
            raise ValueError("standard deviations must be nonnegative")
        object.__setattr__(self, "w2", w2_gap(self.sigma_full, self.sigma_method))


def w2_gap(sigma_a: float, sigma_b: float) -> float:
    """W2 between two one-dimensional Gaussians with a shared mean"""
    return abs(float(sigma_a) - float(sigma_b))


def subsample_test_points(ds: Dataset, size: int | None, seed: int) -> tuple[Dataset, np.ndarray]:
    """Fixed-seed subsample of the test partition; the drawn indices are returned for output metadata"""
    if size is None or size >= ds.n:
        return ds, np.arange(ds.n)
    indices = np.sort(np.random.default_rng(seed).choice(ds.n, size=size, replace=False))
    return ds.subset(indices), indices


def gradients_at_points(model: MlpModel, test_points: Dataset | np.ndarray) -> np.ndarray:
    X = test_points.X if isinstance(test_points, Dataset) else np.atleast_2d(test_points)
    G_star = param_gradients(model, X)
    bad = np.flatnonzero(~np.all(np.isfinite(G_star), axis=1))
    if bad.size:
        raise NumericError(f"non-finite parameter gradient at test index {int(bad[0])}")
    return G_star


def predictive_std(sys: LaplaceSystem, epistemic: np.ndarray, kind: VarianceKind) -> np.ndarray:
    variance = sys.total_variance(epistemic) if kind == VarianceKind.TOTAL else epistemic
    return np.sqrt(variance)


def wasserstein_records(
    sys: LaplaceSystem,
    selection: SubsetSelection,
    G_star: np.ndarray,
    sigma_full: np.ndarray | None = None,
    kind: VarianceKind = VarianceKind.TOTAL,
) -> list[WassersteinRecord]:
    if sigma_full is None:
        sigma_full = predictive_std(sys, full_epistemic_variances(sys, G_star), kind)
    sigma_method = predictive_std(sys, subset_epistemic_variances(sys, selection, G_star), kind)
    return [WassersteinRecord(i, float(a), float(b)) for i, (a, b) in enumerate(zip(sigma_full, sigma_method))]


def mean_and_stderr(values: np.ndarray) -> tuple[float, float]:
    values = np.asarray(values, dtype=np.float64)
    if values.shape[0] < 2:
        return float(values.mean()), 0.0
    return float(values.mean()), float(values.std(ddof=1) / np.sqrt(values.shape[0]))


def wasserstein_sweep(
    sys: LaplaceSystem,
    selections: list[SubsetSelection],
    test_points: Dataset | np.ndarray,
    model: MlpModel,
    kind: VarianceKind = VarianceKind.TOTAL,
    seed: int | None = None,
) -> pd.DataFrame:
    """Mean and standard error over test points of |sigma_full - sigma_method|, one row per selection"""
    if not selections:
        raise ValueError("wasserstein_sweep needs at least one selection")
    G_star = gradients_at_points(model, test_points)
    sigma_full = predictive_std(sys, full_epistemic_variances(sys, G_star), kind)
    rows = []
    for selection in selections:
        records = wasserstein_records(sys, selection, G_star, sigma_full, kind)
        mean, stderr = mean_and_stderr(np.array([r.w2 for r in records]))
        rows.append([selection.method.label, selection.k, seed, "w2", mean, stderr])
        logging.debug(f"w2 {selection.method.label} k={selection.k}: {mean:.6g} +/- {stderr:.3g}")
    return pd.DataFrame(rows, columns=RESULT_COLUMNS)
