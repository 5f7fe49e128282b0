""" Idealized predictive variance IPV(S) and discrepancy Dis(S) from a population gradient second moment """

import itertools
import numpy as np
from collections.abc import Iterable
from dataclasses import dataclass

from ..utils.linalg import jitchol, cho_solve_lower


@dataclass(frozen=True, eq=False)
class IpvInstance:
    """Population second moment Lambda = E[g g^T] with prior diagonal V, noise variance and sample size"""

    Lambda: np.ndarray
    prior_diag: np.ndarray
    noise_var: float = 1.0
    N: int = 1
    seed: int | None = None
    kind: str = "explicit"

    def __post_init__(self):
        Lambda = np.atleast_2d(np.asarray(self.Lambda, dtype=np.float64))
        prior_diag = np.asarray(self.prior_diag, dtype=np.float64).reshape(-1)
        if Lambda.shape != (prior_diag.shape[0], prior_diag.shape[0]):
            raise ValueError(f"Lambda shape {Lambda.shape} does not match prior_diag length {prior_diag.shape[0]}")
        if np.max(np.abs(Lambda - Lambda.T), initial=0.0) > 1e-12:
            raise ValueError("Lambda must be symmetric")
        if np.linalg.eigvalsh(Lambda).min() < -1e-10:
            raise ValueError("Lambda must be positive semi-definite")
        if np.any(prior_diag <= 0) or self.noise_var <= 0 or self.N < 1:
            raise ValueError("prior_diag, noise_var and N must be positive")
        object.__setattr__(self, "Lambda", Lambda)
        object.__setattr__(self, "prior_diag", prior_diag)

    @property
    def p(self) -> int:
        return self.Lambda.shape[0]

    @property
    def scale(self) -> float:
        return self.noise_var / self.N


@dataclass(frozen=True, eq=False)
class ClassificationIpvInstance:
    """Bernoulli-weighted second moment Lambda^C = E[u g g^T] and the cross moment M^C used in the outer expectation"""

    Lambda_c: np.ndarray
    cross_moment: np.ndarray
    prior_diag: np.ndarray
    N: int = 1

    def __post_init__(self):
        for name in ("Lambda_c", "cross_moment"):
            object.__setattr__(self, name, np.atleast_2d(np.asarray(getattr(self, name), dtype=np.float64)))
        object.__setattr__(self, "prior_diag", np.asarray(self.prior_diag, dtype=np.float64).reshape(-1))
        if np.any(self.prior_diag <= 0) or self.N < 1:
            raise ValueError("prior_diag and N must be positive")

    @property
    def p(self) -> int:
        return self.Lambda_c.shape[0]


def _subset_index(S: Iterable[int], p: int) -> np.ndarray:
    idx = np.asarray(sorted(int(i) for i in S), dtype=np.int64)
    if idx.shape[0] == 0:
        raise ValueError("IPV needs a nonempty subset")
    if np.unique(idx).shape[0] != idx.shape[0] or idx[0] < 0 or idx[-1] >= p:
        raise ValueError(f"invalid subset {idx.tolist()} for p={p}")
    return idx


def _trace_form(weight: np.ndarray, numerator: np.ndarray, prior_diag: np.ndarray, scale: float, idx: np.ndarray) -> float:
    A = weight[np.ix_(idx, idx)] + scale * np.diag(prior_diag[idx])
    L = jitchol(A, context="IPV matrix")
    return scale * float(np.trace(cho_solve_lower(L, numerator[np.ix_(idx, idx)])))


def ipv(instance: IpvInstance, S: Iterable[int]) -> float:
    """(sigma^2 / N) tr((Lambda_SS + (sigma^2 / N) V_SS)^-1 Lambda_SS); invariant to the order of S"""
    idx = _subset_index(S, instance.p)
    return _trace_form(instance.Lambda, instance.Lambda, instance.prior_diag, instance.scale, idx)


def ipv_full(instance: IpvInstance) -> float:
    return ipv(instance, range(instance.p))


def dis(instance: IpvInstance, S: Iterable[int], full: float | None = None) -> float:
    full = ipv_full(instance) if full is None else full
    value = full - ipv(instance, S)
    if value < -1e-10:
        raise ArithmeticError(f"negative discrepancy {value:.3e}: IPV(S) exceeds IPV_full")
    return max(value, 0.0)


def ipv_classification(instance: ClassificationIpvInstance, S: Iterable[int]) -> float:
    """(1 / N) tr((Lambda^C_SS + V_SS / N)^-1 M^C_SS)"""
    idx = _subset_index(S, instance.p)
    return _trace_form(instance.Lambda_c, instance.cross_moment, instance.prior_diag, 1.0 / instance.N, idx)


def bernoulli_weighted_moment(G: np.ndarray, f: np.ndarray) -> np.ndarray:
    """E[u g g^T] over gradient samples G with logits f, u the Bernoulli variance sigmoid(f)(1 - sigmoid(f))"""
    G = np.atleast_2d(np.asarray(G, dtype=np.float64))
    prob = 0.5 * (1.0 + np.tanh(0.5 * np.asarray(f, dtype=np.float64).reshape(-1)))
    u = prob * (1.0 - prob)
    moment = (G * u[:, None]).T @ G / G.shape[0]
    return 0.5 * (moment + moment.T)


def classification_instance(
    G: np.ndarray,
    f: np.ndarray,
    prior_diag: np.ndarray,
    N: int,
    G_eval: np.ndarray | None = None,
    f_eval: np.ndarray | None = None,
) -> ClassificationIpvInstance:
    """Empirical Lambda^C from gradient samples G and logits f.

    The outer expectation is estimated on (G_eval, f_eval) when given; without them M^C = Lambda^C,
    the canonical form that reduces to the regression trace.
    """
    Lambda_c = bernoulli_weighted_moment(G, f)
    cross = Lambda_c if G_eval is None else bernoulli_weighted_moment(G_eval, f_eval)
    return ClassificationIpvInstance(Lambda_c, cross, prior_diag, N)


def all_subsets(p: int, size: int | None = None) -> list[tuple[int, ...]]:
    """Nonempty subsets of range(p) (or only those of one size), as sorted tuples"""
    sizes = range(1, p + 1) if size is None else [size]
    return [combo for r in sizes for combo in itertools.combinations(range(p), r)]
