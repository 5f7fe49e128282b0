""" Dataset value types shared by training, Laplace systems and the experiment runners """

import enum
import numpy as np
from dataclasses import dataclass, field


class Task(enum.Enum):
    REGRESSION = enum.auto()
    BINARY = enum.auto()


@dataclass(frozen=True, eq=False)
class Standardizer:
    """Per-column affine transform fit on a training partition only"""

    feature_mean: np.ndarray
    feature_std: np.ndarray
    target_mean: float = 0.0
    target_std: float = 1.0
    clamped_columns: tuple[int, ...] = ()

    @classmethod
    def fit(cls, X: np.ndarray, y: np.ndarray, standardize_target: bool = True) -> "Standardizer":
        feature_mean = X.mean(axis=0)
        feature_std = X.std(axis=0)
        clamped = tuple(int(j) for j in np.flatnonzero(feature_std == 0))
        feature_std = np.where(feature_std == 0, 1.0, feature_std)
        target_mean, target_std = 0.0, 1.0
        if standardize_target:
            target_mean = float(y.mean())
            target_std = float(y.std())
            if target_std == 0:
                target_std = 1.0
        return cls(feature_mean, feature_std, target_mean, target_std, clamped)

    def transform(self, X: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        return (X - self.feature_mean) / self.feature_std, (y - self.target_mean) / self.target_std

    def inverse_transform(self, X: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        return X * self.feature_std + self.feature_mean, y * self.target_std + self.target_mean

    def serialize(self) -> dict:
        return {
            "feature_mean": self.feature_mean.tolist(),
            "feature_std": self.feature_std.tolist(),
            "target_mean": self.target_mean,
            "target_std": self.target_std,
            "clamped_columns": list(self.clamped_columns),
        }


@dataclass(frozen=True, eq=False)
class Dataset:
    X: np.ndarray
    y: np.ndarray
    task: Task = Task.REGRESSION
    standardizer: Standardizer | None = None
    metadata: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        X = np.atleast_2d(np.asarray(self.X, dtype=np.float64))
        y = np.asarray(self.y, dtype=np.float64).reshape(-1)
        if X.shape[0] != y.shape[0]:
            raise ValueError(f"X has {X.shape[0]} rows but y has {y.shape[0]} entries")
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
            raise ValueError("dataset contains NaN or Inf values")
        if self.task == Task.BINARY and not np.all(np.isin(y, (0.0, 1.0))):
            raise ValueError("binary dataset targets must be 0 or 1")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def d(self) -> int:
        return self.X.shape[1]

    def subset(self, indices: np.ndarray) -> "Dataset":
        indices = np.asarray(indices, dtype=np.int64)
        return Dataset(self.X[indices], self.y[indices], self.task, self.standardizer, dict(self.metadata))
