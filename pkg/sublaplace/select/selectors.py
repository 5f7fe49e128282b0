""" Subset selection strategies: Gradient-Laplace, Greedy-Laplace, Subnet Diagonal, Last-k and NeuralLinear """

import logging
import numpy as np
from dataclasses import dataclass, field

from .const import PIVOT_TOLERANCE, EXTENDED_POOL_MARGIN, EXTENDED_POOL_CAP, POOL_DEFAULT, POOL_EXTENDED
from .selection import SelectionError, SelectionMethod, SubsetSelection
from ..data.dataset import Dataset
from ..laplace.system import LaplaceSystem, diag_precision, subset_precision
from ..net.model import MlpModel, iter_param_gradients
from ..utils.linalg import NumericError


class DegeneratePivotError(NumericError):
    "Greedy-Laplace met a pivot diagonal at or below tolerance"


@dataclass(frozen=True, eq=False)
class GradientSummary:
    """Componentwise mean squared per-sample gradient over a reference dataset"""

    tilde_g: np.ndarray

    def __post_init__(self):
        tilde_g = np.asarray(self.tilde_g, dtype=np.float64).reshape(-1)
        if np.any(tilde_g < 0):
            raise ValueError("gradient summary entries must be nonnegative")
        object.__setattr__(self, "tilde_g", tilde_g)

    @property
    def p(self) -> int:
        return self.tilde_g.shape[0]


def gradient_summary(model: MlpModel, reference: Dataset | np.ndarray) -> GradientSummary:
    X = reference.X if isinstance(reference, Dataset) else np.atleast_2d(reference)
    if X.shape[0] == 0:
        raise ValueError("gradient summary needs a nonempty reference dataset")
    total = np.zeros(model.p)
    for chunk in iter_param_gradients(model, X):
        total += np.einsum("ij,ij->j", chunk, chunk)
    return GradientSummary(total / X.shape[0])


def _check_k(k: int, p: int) -> None:
    if not 1 <= k <= p:
        raise SelectionError(f"k={k} must lie in [1, {p}]")


def top_k_indices(scores: np.ndarray, k: int) -> np.ndarray:
    """Positions of the k largest scores, ties broken by ascending index, returned ascending"""
    scores = np.asarray(scores, dtype=np.float64)
    _check_k(k, scores.shape[0])
    order = np.argsort(-scores, kind="stable")
    return np.sort(order[:k])


def bottom_k_indices(scores: np.ndarray, k: int) -> np.ndarray:
    scores = np.asarray(scores, dtype=np.float64)
    _check_k(k, scores.shape[0])
    order = np.argsort(scores, kind="stable")
    return np.sort(order[:k])


def select_gradient_laplace(summary: GradientSummary, k: int) -> SubsetSelection:
    return SubsetSelection(tuple(top_k_indices(summary.tilde_g, k)), SelectionMethod.GRADIENT_LAPLACE, k)


def select_subnet_diagonal(diag: np.ndarray | LaplaceSystem, k: int) -> SubsetSelection:
    """k smallest entries of diag(Omega); accepts the diagonal itself or a system to compute it from"""
    if isinstance(diag, LaplaceSystem):
        diag = diag_precision(diag)
    return SubsetSelection(tuple(bottom_k_indices(diag, k)), SelectionMethod.SUBNET_DIAGONAL, k)


def select_last_k(model: MlpModel, k: int) -> SubsetSelection:
    _check_k(k, model.p)
    return SubsetSelection(tuple(range(model.p - k, model.p)), SelectionMethod.LAST_K, k)


def select_neural_linear(model: MlpModel) -> SubsetSelection:
    last = model.layer_slice(len(model.layers) - 1)
    indices = tuple(range(last.start, last.stop))
    return SubsetSelection(indices, SelectionMethod.NEURAL_LINEAR, len(indices))


def greedy_pool_size(k: int, p: int, pool: str = POOL_DEFAULT) -> int:
    if pool == POOL_DEFAULT:
        return min(2 * k, p)
    if pool == POOL_EXTENDED:
        return max(min(2 * k + EXTENDED_POOL_MARGIN, p - 1, EXTENDED_POOL_CAP), k)
    raise SelectionError(f"unknown pool policy {pool!r}")


@dataclass
class GreedySchurEliminator:
    """Greedy maximum-diagonal elimination over a pool precision matrix.

    Each step records the pool-local pivot with the largest current diagonal (lowest position on ties)
    and replaces the matrix by the Schur complement of that pivot, which is the marginal precision of
    the remaining pool variables.
    """

    matrix: np.ndarray
    remaining: list[int] = field(init=False)
    selected: list[int] = field(default_factory=list, init=False)
    entries_touched: list[int] = field(default_factory=list, init=False)

    def __post_init__(self):
        self.matrix = np.array(self.matrix, dtype=np.float64)
        self.remaining = list(range(self.matrix.shape[0]))

    def step(self) -> int:
        if self.matrix.shape[0] == 0:
            raise SelectionError("greedy pool exhausted")
        diag = np.diag(self.matrix)
        s = int(np.argmax(diag))
        pivot = diag[s]
        if pivot <= PIVOT_TOLERANCE:
            raise DegeneratePivotError(f"pivot diagonal {pivot:.3e} at greedy step {len(self.selected)}")
        keep = np.delete(np.arange(self.matrix.shape[0]), s)
        column = self.matrix[keep, s]
        self.matrix = self.matrix[np.ix_(keep, keep)] - np.outer(column, column) / pivot
        self.entries_touched.append(keep.shape[0] ** 2)
        self.selected.append(self.remaining.pop(s))
        return self.selected[-1]


def select_greedy_laplace(
    sys: LaplaceSystem, summary: GradientSummary, k: int, pool: str = POOL_DEFAULT
) -> SubsetSelection:
    """Greedy-Laplace over a Gradient-Laplace candidate pool; indices are returned in selection order"""
    if k < 1:
        raise SelectionError(f"k={k} must be positive")
    _check_k(k, sys.p)
    pool_size = greedy_pool_size(k, sys.p, pool)
    candidates = top_k_indices(summary.tilde_g, pool_size)
    eliminator = GreedySchurEliminator(subset_precision(sys, candidates))
    for _ in range(k):
        eliminator.step()
    chosen = tuple(int(candidates[local]) for local in eliminator.selected)
    logging.debug(f"greedy selection of k={k} from pool {pool_size} touched {sum(eliminator.entries_touched)} entries")
    return SubsetSelection(chosen, SelectionMethod.GREEDY_LAPLACE, k, pool)


def select(
    method: SelectionMethod,
    k: int | None,
    model: MlpModel,
    sys: LaplaceSystem | None = None,
    summary: GradientSummary | None = None,
    pool: str = POOL_DEFAULT,
) -> SubsetSelection:
    """Dispatch from a method to its selector; k is ignored for NeuralLinear"""
    if method == SelectionMethod.NEURAL_LINEAR:
        return select_neural_linear(model)
    if k is None:
        raise SelectionError(f"{method.label} needs a subset size k")
    if method == SelectionMethod.LAST_K:
        return select_last_k(model, k)
    if method == SelectionMethod.SUBNET_DIAGONAL:
        if sys is None:
            raise SelectionError("subnet_diagonal needs a Laplace system")
        return select_subnet_diagonal(sys, k)
    if summary is None:
        raise SelectionError(f"{method.label} needs a gradient summary")
    if method == SelectionMethod.GRADIENT_LAPLACE:
        return select_gradient_laplace(summary, k)
    if method == SelectionMethod.GREEDY_LAPLACE:
        if sys is None:
            raise SelectionError("greedy_laplace needs a Laplace system")
        return select_greedy_laplace(sys, summary, k, pool)
    raise SelectionError(f"{method.label} is not a selection strategy")
