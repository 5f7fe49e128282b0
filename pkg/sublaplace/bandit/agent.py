""" Neural Thompson Sampling agent with pluggable sub-network Laplace posteriors """

import enum
import logging
import numpy as np
from dataclasses import dataclass
from typing import Protocol

from .const import (
    N_ARMS,
    INPUT_DIM,
    HIDDEN_WIDTHS,
    EXPECTED_P,
    WARM_PULLS_PER_ARM,
    INTERACT_STEPS,
    SGD_UPDATES,
    REPLAY_BATCH,
    LEARNING_RATE,
    GRAD_CLIP,
    RESIDUAL_WINDOW,
    NOISE_VAR_FLOOR,
    PRIOR_PRECISION,
    AGENT_STREAM,
    REPLAY_STREAM,
)
from ..data.dataset import Dataset
from ..laplace.system import LaplaceSystem, Likelihood, build_system, default_prior_diag, subset_precision
from ..net.model import MlpModel, forward_batch, init_model, param_gradients
from ..net.train import AdamState, Loss, clip_by_norm, penalized_step
from ..select.const import POOL_DEFAULT
from ..select.selection import SelectionMethod, SubsetSelection
from ..select.selectors import gradient_summary, select
from ..utils.linalg import NumericError, jitchol, inverse_quadratic_forms


class AgentFault(RuntimeError):
    "Agent produced a non-finite prediction or could not refresh its posterior"


class Posterior(enum.Enum):
    GRADIENT_LAPLACE = enum.auto()
    GREEDY_LAPLACE = enum.auto()
    SUBNET_DIAGONAL = enum.auto()
    LAST_K = enum.auto()
    NEURAL_LINEAR = enum.auto()
    MAP = enum.auto()

    @property
    def label(self) -> str:
        return self.name.lower()

    @property
    def selection_method(self) -> SelectionMethod | None:
        if self == Posterior.MAP:
            return None
        return SelectionMethod[self.name]

    @property
    def uses_k(self) -> bool:
        return self not in (Posterior.NEURAL_LINEAR, Posterior.MAP)

    @classmethod
    def from_label(cls, label: str) -> "Posterior":
        try:
            return cls[label.strip().upper().replace("-", "_")]
        except KeyError:
            raise ValueError(f"unknown posterior {label!r}")


@dataclass(frozen=True)
class AgentConfig:
    posterior: Posterior = Posterior.GRADIENT_LAPLACE
    k: int = 500
    warm_pulls_per_arm: int = WARM_PULLS_PER_ARM
    interact_steps: int = INTERACT_STEPS
    sgd_updates: int = SGD_UPDATES
    replay_batch: int = REPLAY_BATCH
    lr: float = LEARNING_RATE
    grad_clip: float = GRAD_CLIP
    residual_window: int = RESIDUAL_WINDOW
    prior_precision: float = PRIOR_PRECISION
    hidden_widths: tuple[int, ...] = HIDDEN_WIDTHS
    pool: str = POOL_DEFAULT
    seed: int = 0

    def __post_init__(self):
        if self.posterior.uses_k and self.k < 1:
            raise ValueError(f"k must be positive for {self.posterior.label}, got {self.k}")
        for name in ("warm_pulls_per_arm", "interact_steps", "sgd_updates", "replay_batch", "residual_window"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if self.lr <= 0 or self.grad_clip <= 0 or self.prior_precision <= 0:
            raise ValueError("lr, grad_clip and prior_precision must be positive")
        object.__setattr__(self, "hidden_widths", tuple(self.hidden_widths))

    @property
    def warm_rounds(self) -> int:
        return self.warm_pulls_per_arm * N_ARMS


class Policy(Protocol):
    def select(self, t: int, context: np.ndarray) -> int:
        ...

    def observe(self, t: int, context: np.ndarray, arm: int, reward: float) -> None:
        ...


def encode_inputs(context: np.ndarray) -> np.ndarray:
    """(N_ARMS, INPUT_DIM) network inputs: the context followed by each arm's one-hot code"""
    context = np.asarray(context, dtype=np.float64).reshape(-1)
    return np.hstack([np.tile(context, (N_ARMS, 1)), np.eye(N_ARMS)])


def thompson_choice(means: np.ndarray, variances: np.ndarray, rng: np.random.Generator) -> int:
    """Argmax over one Gaussian draw per arm, ties to the lowest arm"""
    samples = means + np.sqrt(np.maximum(variances, 0.0)) * rng.standard_normal(means.shape[0])
    return int(np.argmax(samples))


class ThompsonAgent:
    def __init__(self, cfg: AgentConfig) -> None:
        self.cfg = cfg
        self.model = init_model(INPUT_DIM, cfg.hidden_widths, cfg.seed)
        if cfg.hidden_widths == HIDDEN_WIDTHS and self.model.p != EXPECTED_P:
            raise AgentFault(f"agent network has p={self.model.p}, expected {EXPECTED_P}")
        self.rng = np.random.default_rng([cfg.seed, AGENT_STREAM])
        self.replay_rng = np.random.default_rng([cfg.seed, REPLAY_STREAM])
        self.optimizer = AdamState(self.model.p)
        self.warm_schedule = self.rng.permutation(np.repeat(np.arange(N_ARMS), cfg.warm_pulls_per_arm))
        self.inputs: list[np.ndarray] = []
        self.rewards: list[float] = []
        self.residuals: list[float] = []
        self.noise_var = 1.0
        self.system: LaplaceSystem | None = None
        self.selection: SubsetSelection | None = None
        self.factor: np.ndarray | None = None
        self.phases = 0

    def select(self, t: int, context: np.ndarray) -> int:
        if t < self.cfg.warm_rounds:
            return int(self.warm_schedule[t])
        if (t - self.cfg.warm_rounds) % self.cfg.interact_steps == 0:
            self.__train_phase(t)
        inputs = encode_inputs(context)
        means = forward_batch(self.model, inputs)
        if not np.all(np.isfinite(means)):
            logging.error(f"non-finite network output at round {t}")
            raise AgentFault(f"non-finite network output at round {t}")
        if self.cfg.posterior == Posterior.MAP:
            return int(np.argmax(means))
        return thompson_choice(means, self.arm_variances(context), self.rng)

    def observe(self, t: int, context: np.ndarray, arm: int, reward: float) -> None:
        x = encode_inputs(context)[arm]
        # online residual: scored by the network that made the decision
        self.residuals.append(float(reward) - float(forward_batch(self.model, x[None, :])[0]))
        self.inputs.append(x)
        self.rewards.append(float(reward))

    def arm_variances(self, context: np.ndarray) -> np.ndarray:
        """sigma_0^2 + g_S^T Omega_SS^-1 g_S for every arm under the current posterior"""
        if self.factor is None or self.selection is None:
            raise AgentFault("posterior requested before the first refresh")
        G = param_gradients(self.model, encode_inputs(context))
        return self.noise_var + inverse_quadratic_forms(self.factor, G[:, self.selection.as_array()])

    def replay_dataset(self) -> Dataset:
        return Dataset(np.vstack(self.inputs), np.asarray(self.rewards))

    def refresh_posterior(self) -> None:
        """Re-estimate the noise variance, rebuild Omega from the whole replay buffer, re-select the subset and factor Omega_SS

        The noise variance comes from the last residual_window online residuals, each one taken before
        the network trained on that reward.
        """
        data = self.replay_dataset()
        self.noise_var = max(float(np.var(self.residuals[-self.cfg.residual_window :])), NOISE_VAR_FLOOR)
        if self.cfg.posterior == Posterior.MAP:
            return
        self.system = build_system(
            self.model,
            data,
            Likelihood.REGRESSION,
            self.noise_var,
            default_prior_diag(self.model.p, self.cfg.prior_precision),
        )
        summary = gradient_summary(self.model, data) if self.cfg.posterior.uses_k else None
        k = min(self.cfg.k, self.model.p) if self.cfg.posterior.uses_k else None
        self.selection = select(self.cfg.posterior.selection_method, k, self.model, self.system, summary, self.cfg.pool)
        self.factor = jitchol(subset_precision(self.system, self.selection.as_array()), context="Thompson Omega_SS")

    def __train_phase(self, t: int) -> None:
        data = self.replay_dataset()
        penalty = self.cfg.prior_precision / data.n
        batch_size = min(self.cfg.replay_batch, data.n)
        theta = self.model.theta.copy()
        for _ in range(self.cfg.sgd_updates):
            batch = self.replay_rng.choice(data.n, size=batch_size, replace=False)
            objective, grad = penalized_step(self.model, theta, data.X[batch], data.y[batch], Loss.MSE, penalty)
            if not np.isfinite(objective) or not np.all(np.isfinite(grad)):
                logging.error(f"agent training diverged at round {t}")
                raise AgentFault(f"non-finite training loss at round {t}")
            theta = self.optimizer.step(theta, clip_by_norm(grad, self.cfg.grad_clip), self.cfg.lr)
        self.model = self.model.with_theta(theta)
        try:
            self.refresh_posterior()
        except NumericError as e:
            logging.error(f"posterior refresh failed at round {t}: {e}")
            raise AgentFault(f"posterior refresh failed at round {t}") from e
        self.phases += 1
        logging.debug(f"round {t}: training phase {self.phases}, noise variance {self.noise_var:.3g}, buffer {data.n}")
