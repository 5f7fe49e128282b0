""" First-order MAP training (Adam or SGD with momentum) and bootstrap deep ensembles """

import enum
import logging
import numpy as np
from dataclasses import dataclass, replace

from .const import ADAM_BETA1, ADAM_BETA2, ADAM_EPS, SGD_MOMENTUM, LOG_EVERY_EPOCHS
from .model import MlpModel, init_model, loss_and_gradient
from ..data.dataset import Dataset, Task


class DivergenceError(RuntimeError):
    "Training produced a non-finite loss"


class Optimizer(enum.Enum):
    ADAM = enum.auto()
    SGD_MOMENTUM = enum.auto()


class LRSchedule(enum.Enum):
    CONSTANT = enum.auto()
    COSINE_ANNEAL = enum.auto()


class Loss(enum.Enum):
    MSE = enum.auto()
    BCE = enum.auto()


@dataclass(frozen=True)
class TrainConfig:
    """Training recipe. weight_decay is the same knob as train_map's prior_precision and is used when that is not given"""

    optimizer: Optimizer = Optimizer.ADAM
    learning_rate: float = 1e-3
    epochs: int = 100
    batch_size: int = 256
    lr_schedule: LRSchedule = LRSchedule.COSINE_ANNEAL
    weight_decay: float = 0.0
    grad_clip: float | None = None
    seed: int = 0

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError(f"learning_rate must be positive, got {self.learning_rate}")
        if self.epochs < 1 or self.batch_size < 1:
            raise ValueError("epochs and batch_size must be positive")
        if self.weight_decay < 0:
            raise ValueError(f"weight_decay must be nonnegative, got {self.weight_decay}")
        if self.grad_clip is not None and self.grad_clip <= 0:
            raise ValueError(f"grad_clip must be positive when given, got {self.grad_clip}")
        if not 0 <= self.seed < 2**64:
            raise ValueError(f"seed must be an unsigned 64-bit integer, got {self.seed}")

    def learning_rate_at(self, epoch: int) -> float:
        """Step size for a zero-based epoch; the cosine schedule decays to 0 over the run"""
        if self.lr_schedule == LRSchedule.CONSTANT:
            return self.learning_rate
        return 0.5 * self.learning_rate * (1.0 + np.cos(np.pi * epoch / self.epochs))


class AdamState:
    def __init__(self, p: int, beta1: float = ADAM_BETA1, beta2: float = ADAM_BETA2, eps: float = ADAM_EPS) -> None:
        self.m = np.zeros(p)
        self.v = np.zeros(p)
        self.t = 0
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps

    def step(self, theta: np.ndarray, grad: np.ndarray, lr: float) -> np.ndarray:
        self.t += 1
        self.m = self.beta1 * self.m + (1 - self.beta1) * grad
        self.v = self.beta2 * self.v + (1 - self.beta2) * grad * grad
        m_hat = self.m / (1 - self.beta1**self.t)
        v_hat = self.v / (1 - self.beta2**self.t)
        return theta - lr * m_hat / (np.sqrt(v_hat) + self.eps)


class SgdMomentumState:
    def __init__(self, p: int, momentum: float = SGD_MOMENTUM) -> None:
        self.velocity = np.zeros(p)
        self.momentum = momentum

    def step(self, theta: np.ndarray, grad: np.ndarray, lr: float) -> np.ndarray:
        self.velocity = self.momentum * self.velocity + grad
        return theta - lr * self.velocity


def make_optimizer_state(optimizer: Optimizer, p: int) -> AdamState | SgdMomentumState:
    if optimizer == Optimizer.ADAM:
        return AdamState(p)
    return SgdMomentumState(p)


def mse_output_grad(y: np.ndarray):
    """Per-row Gaussian negative log-likelihood at unit noise, (f - y)^2 / 2, and its derivative f - y"""
    def fn(f: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        residual = f - y
        return 0.5 * residual**2, residual

    return fn


def bce_output_grad(y: np.ndarray):
    def fn(f: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        # log(1 + e^f) - y f, written to stay finite for large |f|
        losses = np.logaddexp(0.0, f) - y * f
        prob = 0.5 * (1.0 + np.tanh(0.5 * f))
        return losses, prob - y

    return fn


def output_grad_fn(loss: Loss, y: np.ndarray):
    return mse_output_grad(y) if loss == Loss.MSE else bce_output_grad(y)


def clip_by_norm(grad: np.ndarray, max_norm: float | None) -> np.ndarray:
    if max_norm is None:
        return grad
    norm = float(np.linalg.norm(grad))
    if norm > max_norm:
        return grad * (max_norm / norm)
    return grad


def penalized_step(
    model: MlpModel,
    theta: np.ndarray,
    X: np.ndarray,
    y: np.ndarray,
    loss: Loss,
    penalty: float,
) -> tuple[float, np.ndarray]:
    """Batch objective mean loss + penalty/2 * ||theta||^2 and its gradient"""
    batch_loss, grad = loss_and_gradient(model.with_theta(theta), X, output_grad_fn(loss, y))
    objective = batch_loss + 0.5 * penalty * float(theta @ theta)
    return objective, grad + penalty * theta


def train_map(
    model: MlpModel,
    data: Dataset,
    loss: Loss,
    cfg: TrainConfig,
    prior_precision: float | None = None,
) -> MlpModel:
    """Train to the MAP estimate under an isotropic Gaussian prior.

    The per-sample objective is loss(f(x_n), y_n) + prior_precision / (2 N) * ||theta||^2, so the full-data
    objective is the negative log posterior up to scale. Mini-batch order is a seeded shuffle per epoch.
    """
    if data.n == 0:
        raise ValueError("cannot train on an empty dataset")
    if loss == Loss.BCE and not np.all(np.isin(data.y, (0.0, 1.0))):
        raise ValueError("BCE training requires targets in {0, 1}")
    if prior_precision is None:
        prior_precision = cfg.weight_decay
    elif cfg.weight_decay and cfg.weight_decay != prior_precision:
        logging.warning(f"prior_precision {prior_precision} overrides cfg.weight_decay {cfg.weight_decay}")
    if prior_precision < 0:
        raise ValueError(f"prior_precision must be nonnegative, got {prior_precision}")

    penalty = prior_precision / data.n
    rng = np.random.default_rng(cfg.seed)
    state = make_optimizer_state(cfg.optimizer, model.p)
    theta = model.theta.copy()
    batch_size = min(cfg.batch_size, data.n)
    for epoch in range(cfg.epochs):
        lr = cfg.learning_rate_at(epoch)
        order = rng.permutation(data.n)
        epoch_loss = 0.0
        for start in range(0, data.n, batch_size):
            batch = order[start : start + batch_size]
            objective, grad = penalized_step(model, theta, data.X[batch], data.y[batch], loss, penalty)
            if not np.isfinite(objective) or not np.all(np.isfinite(grad)):
                logging.error(f"training diverged at epoch {epoch}")
                raise DivergenceError(f"non-finite loss at epoch {epoch}")
            theta = state.step(theta, clip_by_norm(grad, cfg.grad_clip), lr)
            epoch_loss += objective * batch.shape[0]
        if (epoch + 1) % LOG_EVERY_EPOCHS == 0 or epoch + 1 == cfg.epochs:
            logging.debug(f"epoch {epoch + 1}/{cfg.epochs} objective {epoch_loss / data.n:.6g} lr {lr:.3g}")
    return model.with_theta(theta)


def task_loss(data: Dataset) -> Loss:
    return Loss.BCE if data.task == Task.BINARY else Loss.MSE


def ensemble_train(
    data: Dataset,
    B: int,
    cfg: TrainConfig,
    hidden_widths: list[int] | tuple[int, ...],
    loss: Loss | None = None,
    prior_precision: float | None = None,
) -> list[MlpModel]:
    """B members, each initialized and trained on its own bootstrap resample of the data.

    Member seeds are spawned from cfg.seed, so the ensemble is a pure function of its inputs.
    """
    if B < 2:
        raise ValueError(f"an ensemble needs at least 2 members, got {B}")
    loss = task_loss(data) if loss is None else loss
    children = np.random.SeedSequence(cfg.seed).spawn(B)
    members = []
    for b, child in enumerate(children):
        member_seed = int(child.generate_state(1, dtype=np.uint64)[0])
        rng = np.random.default_rng(child)
        resample = rng.integers(0, data.n, size=data.n)
        model = init_model(data.d, hidden_widths, member_seed)
        member = train_map(model, data.subset(resample), loss, replace(cfg, seed=member_seed), prior_precision)
        members.append(member)
        logging.info(f"ensemble member {b + 1}/{B} trained")
    return members
