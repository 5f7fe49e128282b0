""" Script to generate seeded synthetic regression and binary tasks with a known generating function """

import enum
import logging
import numpy as np
from dataclasses import dataclass

from .dataset import Dataset, Task
from ..net.model import MlpModel, forward_batch, init_model

TRUNCATION_RADIUS = 6.0
PLANTED_WIDTHS = (20, 20)


class SyntheticGenerator(enum.Enum):
    SMOOTH_SINE = enum.auto()
    PLANTED_MLP = enum.auto()


@dataclass(frozen=True)
class SyntheticSpec:
    generator: SyntheticGenerator = SyntheticGenerator.SMOOTH_SINE
    n_train: int = 1000
    n_test: int = 200
    input_dim: int = 5
    noise_std: float = 0.1
    seed: int = 0
    task: Task = Task.REGRESSION

    def __post_init__(self):
        if self.noise_std <= 0:
            raise ValueError(f"noise_std must be positive, got {self.noise_std}")
        if self.n_train < 1 or self.n_test < 1 or self.input_dim < 1:
            raise ValueError("n_train, n_test and input_dim must be positive")


@dataclass(frozen=True, eq=False)
class SmoothSineOracle:
    """h_true(x) = sin(w . x)"""

    w: np.ndarray

    def __call__(self, X: np.ndarray) -> np.ndarray:
        return np.sin(np.atleast_2d(X) @ self.w)


@dataclass(frozen=True, eq=False)
class PlantedMlpOracle:
    """h_true(x) = output of a frozen random MLP"""

    model: MlpModel

    def __call__(self, X: np.ndarray) -> np.ndarray:
        return forward_batch(self.model, X)


def truncated_normal_inputs(rng: np.random.Generator, n: int, d: int, radius: float = TRUNCATION_RADIUS) -> np.ndarray:
    """Standard normal entries, each resampled until |x_j| <= radius"""
    X = rng.standard_normal((n, d))
    outside = np.abs(X) > radius
    while outside.any():
        X[outside] = rng.standard_normal(int(outside.sum()))
        outside = np.abs(X) > radius
    return X


def make_oracle(spec: SyntheticSpec, seed_seq: np.random.SeedSequence) -> SmoothSineOracle | PlantedMlpOracle:
    if spec.generator == SyntheticGenerator.SMOOTH_SINE:
        w = np.random.default_rng(seed_seq).standard_normal(spec.input_dim) / np.sqrt(spec.input_dim)
        return SmoothSineOracle(w)
    model_seed = int(seed_seq.generate_state(1, dtype=np.uint64)[0])
    return PlantedMlpOracle(init_model(spec.input_dim, PLANTED_WIDTHS, model_seed))


def make_synthetic(spec: SyntheticSpec) -> tuple[Dataset, Dataset, SmoothSineOracle | PlantedMlpOracle]:
    """(train, test, h_true). Regression targets are h_true(x) + N(0, noise_std^2); binary targets are
    Bernoulli(sigmoid(h_true(x))) and the oracle then returns the logit. Neither partition is standardized."""
    oracle_seq, input_seq, target_seq = np.random.SeedSequence(spec.seed).spawn(3)
    oracle = make_oracle(spec, oracle_seq)
    n = spec.n_train + spec.n_test
    X = truncated_normal_inputs(np.random.default_rng(input_seq), n, spec.input_dim)
    h = oracle(X)
    target_rng = np.random.default_rng(target_seq)
    if spec.task == Task.REGRESSION:
        y = h + spec.noise_std * target_rng.standard_normal(n)
    else:
        y = (target_rng.uniform(size=n) < 0.5 * (1.0 + np.tanh(0.5 * h))).astype(np.float64)
    metadata = {"generator": spec.generator.name, "seed": spec.seed, "noise_std": spec.noise_std}
    train = Dataset(X[: spec.n_train], y[: spec.n_train], spec.task, metadata=dict(metadata, partition="train"))
    test = Dataset(X[spec.n_train :], y[spec.n_train :], spec.task, metadata=dict(metadata, partition="test"))
    logging.info(f"synthetic {spec.generator.name} task with {spec.n_train} train and {spec.n_test} test points, d={spec.input_dim}")
    return train, test, oracle
