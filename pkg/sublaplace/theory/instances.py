""" Generators for population second-moment matrices: random PSD, permutation-invariant plus diagonal, and epsilon-diagonally dominant """

import numpy as np

from .ipv import ClassificationIpvInstance, IpvInstance, classification_instance


class ConstructionError(ValueError):
    "Requested instance parameters cannot be realized"


def make_random_instance(
    p: int,
    seed: int,
    rank: int | None = None,
    min_eigenvalue: float | None = None,
    noise_var: float = 1.0,
    N: int = 10,
) -> IpvInstance:
    """Lambda = A A^T / r for Gaussian A of seeded rank; min_eigenvalue pins the smallest eigenvalue (near-singular cases)"""
    rng = np.random.default_rng(seed)
    rank = int(rng.integers(1, p + 1)) if rank is None else rank
    A = rng.standard_normal((p, rank))
    Lambda = A @ A.T / rank
    if min_eigenvalue is not None:
        eigenvalues, vectors = np.linalg.eigh(Lambda)
        eigenvalues = np.maximum(eigenvalues, min_eigenvalue)
        eigenvalues[0] = min_eigenvalue
        Lambda = (vectors * eigenvalues) @ vectors.T
    Lambda = 0.5 * (Lambda + Lambda.T)
    return IpvInstance(Lambda, np.ones(p), noise_var, N, seed, "random")


def make_cpi_instance(
    p: int,
    seed: int,
    diag_spread: float = 1.0,
    a: float = 0.5,
    b: float = 1.0,
    prior_scale: float = 1.0,
    noise_var: float = 1.0,
    N: int = 10,
    diagonal: np.ndarray | None = None,
) -> IpvInstance:
    """Lambda = D + a I + b 11^T with seeded positive diagonal D spread over [1, 1 + diag_spread], and V = prior_scale I"""
    if p < 2:
        raise ConstructionError(f"p must be at least 2, got {p}")
    if a < 0 or b < 0 or diag_spread < 0:
        raise ConstructionError("a, b and diag_spread must be nonnegative")
    rng = np.random.default_rng(seed)
    d = 1.0 + diag_spread * rng.uniform(0.0, 1.0, size=p) if diagonal is None else np.asarray(diagonal, dtype=np.float64)
    if np.any(d <= 0):
        raise ConstructionError("diagonal part must be positive")
    Lambda = np.diag(d) + a * np.eye(p) + b * np.ones((p, p))
    return IpvInstance(Lambda, np.full(p, prior_scale), noise_var, N, seed, "cpi")


def is_epsilon_dominant(Lambda: np.ndarray, epsilon: float) -> bool:
    """Every row: epsilon * Lambda_ii > sum of |Lambda_ij| over j != i"""
    Lambda = np.asarray(Lambda)
    off = np.abs(Lambda).sum(axis=1) - np.abs(np.diag(Lambda))
    return bool(np.all(epsilon * np.diag(Lambda) > off))


def ratio_conditions(Lambda: np.ndarray, epsilon: float, k: int) -> tuple[bool, bool]:
    """(bottom condition, strong condition) on the sorted diagonal m_1 >= m_2 >= ...

    bottom: Lambda_{m_k} / Lambda_{m_{p-k+1}} > (1 + eps) / (1 - eps)
    strong: Lambda_{m_k} / Lambda_{m_{k+1}} > (1 + eps) / (1 - eps)
    """
    d = np.sort(np.diag(np.asarray(Lambda)))[::-1]
    p = d.shape[0]
    threshold = (1 + epsilon) / (1 - epsilon)
    bottom = bool(d[k - 1] > threshold * d[p - k])
    strong = bool(k < p and d[k - 1] > threshold * d[k])
    return bottom, strong


def make_dd_instance(
    p: int,
    epsilon: float,
    ratio_margin: float,
    seed: int,
    k: int = 2,
    off_diagonal_scale: float = 0.9,
    noise_var: float = 1.0,
    N: int = 10,
) -> IpvInstance:
    """Seeded epsilon-diagonally dominant Lambda whose diagonal has a gap after its k-th largest entry.

    The k largest diagonals exceed ratio_margin * (1 + eps) / (1 - eps) times every other diagonal, so both
    ratio conditions hold at k. Off-diagonals are random with each row's absolute sum at most
    off_diagonal_scale * eps * Lambda_ii; the diagonal positions are shuffled.
    """
    if not 0 < epsilon < 1:
        raise ConstructionError(f"epsilon must lie in (0, 1), got {epsilon}")
    if ratio_margin <= 1:
        raise ConstructionError(f"ratio_margin must exceed 1, got {ratio_margin}")
    if not 1 <= k or 2 * k > p:
        raise ConstructionError(f"need 1 <= k and 2k <= p, got k={k}, p={p}")
    if not 0 <= off_diagonal_scale < 1:
        raise ConstructionError(f"off_diagonal_scale must lie in [0, 1), got {off_diagonal_scale}")
    rng = np.random.default_rng(seed)
    threshold = ratio_margin * (1 + epsilon) / (1 - epsilon)
    low = rng.uniform(0.5, 1.0, size=p - k)
    high = threshold * rng.uniform(1.0, 1.5, size=k)
    d = rng.permutation(np.concatenate([high, low]))

    R = rng.uniform(-1.0, 1.0, size=(p, p))
    R = np.triu(R, 1)
    R = R + R.T
    # Each off-diagonal is bounded by the smaller of its two diagonals, so every row stays dominant
    bound = off_diagonal_scale * epsilon * np.minimum.outer(d, d) / (p - 1)
    Lambda = np.diag(d) + R * bound
    if not is_epsilon_dominant(Lambda, epsilon):
        raise ConstructionError("generated matrix failed the dominance audit")
    return IpvInstance(Lambda, np.ones(p), noise_var, N, seed, "dd")


def make_classification_instance(
    p: int, seed: int, n_samples: int = 2000, logit_scale: float = 2.0, N: int = 10
) -> ClassificationIpvInstance:
    """Canonical classification instance from Gaussian gradient samples with a random covariance and Gaussian logits"""
    if n_samples < 1:
        raise ConstructionError(f"n_samples must be positive, got {n_samples}")
    base = make_random_instance(p, seed)
    rng = np.random.default_rng([seed, 1])
    G = rng.multivariate_normal(np.zeros(p), base.Lambda, size=n_samples, method="eigh")
    f = logit_scale * rng.standard_normal(n_samples)
    return classification_instance(G, f, np.ones(p), N)
