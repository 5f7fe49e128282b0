""" Gauss-Newton Laplace systems held implicitly as (J, prior diagonal) and their predictive variances """

import enum
import logging
import numpy as np
from dataclasses import dataclass
from functools import cached_property

from .const import DEFAULT_PRIOR_PRECISION, NOISE_VAR_FLOOR, MAX_SUBSET_SIZE
from ..data.dataset import Dataset
from ..net.model import MlpModel, forward_batch, iter_param_gradients
from ..select.selection import SubsetSelection
from ..utils.linalg import NumericError, jitchol, inverse_quadratic_forms


class CapacityError(ValueError):
    "Requested dense matrix is larger than the materialization guard"


class Likelihood(enum.Enum):
    REGRESSION = enum.auto()
    BINARY_CLASSIFICATION = enum.auto()


@dataclass(frozen=True)
class PredictiveVariance:
    epistemic: float
    total: float

    @property
    def std(self) -> float:
        return float(np.sqrt(self.total))


@dataclass(frozen=True, eq=False)
class LaplaceSystem:
    """Omega = J^T J + diag(prior_diag), never formed at full size.

    For regression row n of J is g(x_n) / sigma_0; for binary classification it is sqrt(p_n (1 - p_n)) g(x_n).
    """

    J: np.ndarray
    prior_diag: np.ndarray
    noise_var: float
    likelihood: Likelihood = Likelihood.REGRESSION

    def __post_init__(self):
        J = np.atleast_2d(np.asarray(self.J, dtype=np.float64))
        prior_diag = np.asarray(self.prior_diag, dtype=np.float64).reshape(-1)
        if prior_diag.shape[0] != J.shape[1]:
            raise ValueError(f"prior_diag has length {prior_diag.shape[0]}, J has {J.shape[1]} columns")
        if np.any(prior_diag <= 0):
            raise ValueError("prior_diag entries must be positive")
        if self.noise_var <= 0:
            raise ValueError(f"noise_var must be positive, got {self.noise_var}")
        J.setflags(write=False)
        prior_diag.setflags(write=False)
        object.__setattr__(self, "J", J)
        object.__setattr__(self, "prior_diag", prior_diag)

    @property
    def N(self) -> int:
        return self.J.shape[0]

    @property
    def p(self) -> int:
        return self.J.shape[1]

    @cached_property
    def kernel_factor(self) -> np.ndarray:
        """Lower Cholesky factor of the N x N kernel I_N + J V^-1 J^T"""
        scaled = self.J / np.sqrt(self.prior_diag)
        kernel = scaled @ scaled.T
        kernel = 0.5 * (kernel + kernel.T)
        kernel[np.diag_indices(self.N)] += 1.0
        return jitchol(kernel, context="Woodbury kernel")

    def total_variance(self, epistemic: np.ndarray) -> np.ndarray:
        if self.likelihood == Likelihood.REGRESSION:
            return self.noise_var + epistemic
        return epistemic

    def dense_precision(self) -> np.ndarray:
        """Full p x p Omega; only for small systems and test oracles"""
        return subset_precision(self, np.arange(self.p))


def default_prior_diag(p: int, alpha: float = DEFAULT_PRIOR_PRECISION) -> np.ndarray:
    return np.full(p, float(alpha))


def sigmoid(f: np.ndarray) -> np.ndarray:
    return 0.5 * (1.0 + np.tanh(0.5 * f))


def build_system(
    model: MlpModel,
    data: Dataset,
    likelihood: Likelihood,
    noise_var: float = 1.0,
    prior_diag: np.ndarray | None = None,
) -> LaplaceSystem:
    """Assemble J row by row from per-sample parameter gradients with the likelihood-specific row weight"""
    if data.n == 0:
        raise ValueError("cannot build a Laplace system from an empty dataset")
    prior_diag = default_prior_diag(model.p) if prior_diag is None else prior_diag
    G = np.concatenate(list(iter_param_gradients(model, data.X)), axis=0)
    bad_rows = np.flatnonzero(~np.all(np.isfinite(G), axis=1))
    if bad_rows.size:
        raise NumericError(f"non-finite gradient at data point {int(bad_rows[0])}")
    if likelihood == Likelihood.REGRESSION:
        J = G / np.sqrt(noise_var)
    else:
        prob = sigmoid(forward_batch(model, data.X))
        J = np.sqrt(prob * (1.0 - prob))[:, None] * G
        noise_var = 1.0
    logging.debug(f"Laplace system built with N={data.n}, p={model.p}, likelihood={likelihood.name}")
    return LaplaceSystem(J, prior_diag, noise_var, likelihood)


def diag_precision(sys: LaplaceSystem) -> np.ndarray:
    return np.einsum("ij,ij->j", sys.J, sys.J) + sys.prior_diag


def subset_precision(sys: LaplaceSystem, indices: np.ndarray | list[int]) -> np.ndarray:
    """Omega restricted to indices, assembled symmetric from the selected Jacobian columns"""
    idx = np.asarray(indices, dtype=np.int64).reshape(-1)
    if idx.shape[0] > MAX_SUBSET_SIZE:
        raise CapacityError(f"subset of size {idx.shape[0]} exceeds the guard of {MAX_SUBSET_SIZE}")
    J_S = sys.J[:, idx]
    M = J_S.T @ J_S
    M = 0.5 * (M + M.T)
    M[np.diag_indices(idx.shape[0])] += sys.prior_diag[idx]
    return M


def full_epistemic_variances(sys: LaplaceSystem, G_star: np.ndarray) -> np.ndarray:
    """g^T Omega^-1 g for every row of G_star by the Woodbury identity on the N x N kernel"""
    G_star = np.atleast_2d(np.asarray(G_star, dtype=np.float64))
    if G_star.shape[1] != sys.p:
        raise ValueError(f"test gradients have {G_star.shape[1]} entries, system has p={sys.p}")
    G_tilde = G_star / sys.prior_diag
    prior_term = np.einsum("ij,ij->i", G_star, G_tilde)
    U = sys.J @ G_tilde.T
    correction = inverse_quadratic_forms(sys.kernel_factor, U.T)
    return np.maximum(prior_term - correction, 0.0)


def subset_epistemic_variances(sys: LaplaceSystem, S: SubsetSelection, G_star: np.ndarray) -> np.ndarray:
    """g_S^T Omega_SS^-1 g_S for every row of G_star, which equals the pseudoinverse form of the zero-padded Omega_SS"""
    idx = S.validate(sys.p)
    G_star = np.atleast_2d(np.asarray(G_star, dtype=np.float64))
    L = jitchol(subset_precision(sys, idx), context=f"Omega_SS (k={idx.shape[0]})")
    return inverse_quadratic_forms(L, G_star[:, idx])


def full_predictive_variance(sys: LaplaceSystem, g_star: np.ndarray) -> PredictiveVariance:
    epistemic = float(full_epistemic_variances(sys, g_star)[0])
    return PredictiveVariance(epistemic, float(sys.total_variance(epistemic)))


def subset_predictive_variance(sys: LaplaceSystem, S: SubsetSelection, g_star: np.ndarray) -> PredictiveVariance:
    epistemic = float(subset_epistemic_variances(sys, S, g_star)[0])
    return PredictiveVariance(epistemic, float(sys.total_variance(epistemic)))


def estimate_noise_var(model: MlpModel, data: Dataset, floor: float = NOISE_VAR_FLOOR) -> float:
    """Residual mean squared error of the model on (held-out) data, floored"""
    residuals = data.y - forward_batch(model, data.X)
    return max(float(np.mean(residuals**2)), floor)
