""" Script to simulate the Wheel Bandit: contexts on the unit disk with a high-reward outer annulus per quadrant arm """

import numpy as np
from dataclasses import dataclass

from .const import (
    DELTA,
    MU_CENTER,
    MU_HIGH,
    REWARD_STD,
    N_ARMS,
    CONTEXT_DIM,
    CONTEXT_STREAM,
    REWARD_STREAM,
    QUADRANT_ARMS,
)


class ProtocolError(ValueError):
    "Environment was asked for an invalid arm or round"


@dataclass(frozen=True)
class WheelConfig:
    delta: float = DELTA
    mu_center: float = MU_CENTER
    mu_high: float = MU_HIGH
    reward_std: float = REWARD_STD
    inner_center_bonus: float = 0.0
    horizon: int = 2000
    seed: int = 0

    def __post_init__(self):
        if not 0 < self.delta < 1:
            raise ValueError(f"delta must lie in (0, 1), got {self.delta}")
        if self.mu_high <= self.mu_center:
            raise ValueError("mu_high must exceed mu_center")
        if self.reward_std <= 0:
            raise ValueError(f"reward_std must be positive, got {self.reward_std}")
        if self.horizon < 1:
            raise ValueError(f"horizon must be positive, got {self.horizon}")
        if not 0 <= self.seed < 2**64:
            raise ValueError(f"seed must be an unsigned 64-bit integer, got {self.seed}")


def sample_contexts(rng: np.random.Generator, n: int) -> np.ndarray:
    """n points uniform on the unit disk by rejection from the enclosing square"""
    accepted = np.empty((0, CONTEXT_DIM))
    while accepted.shape[0] < n:
        need = n - accepted.shape[0]
        candidates = rng.uniform(-1.0, 1.0, size=(int(need * 1.3) + 8, CONTEXT_DIM))
        inside = candidates[np.einsum("ij,ij->i", candidates, candidates) <= 1.0]
        accepted = np.concatenate([accepted, inside[:need]])
    return accepted


def quadrant_arm(context: np.ndarray) -> int:
    """Quadrant arm (1-4) whose sign pattern matches the context"""
    x1_sign = 1 if context[0] >= 0 else -1
    x2_sign = 1 if context[1] >= 0 else -1
    for entry in QUADRANT_ARMS:
        if (entry.x1_sign, entry.x2_sign) == (x1_sign, x2_sign):
            return entry.arm
    raise ProtocolError(f"no quadrant arm for context {context}")


def check_arm(arm: int) -> int:
    if not isinstance(arm, (int, np.integer)) or not 0 <= arm < N_ARMS:
        raise ProtocolError(f"arm must be an integer in [0, {N_ARMS - 1}], got {arm!r}")
    return int(arm)


def arm_means(cfg: WheelConfig, context: np.ndarray) -> np.ndarray:
    """Mean reward of every arm; arm 0 is the central arm"""
    means = np.full(N_ARMS, cfg.mu_center)
    if np.linalg.norm(context) > cfg.delta:
        means[quadrant_arm(context)] = cfg.mu_high
    else:
        means[0] += cfg.inner_center_bonus
    return means


def arm_mean(cfg: WheelConfig, context: np.ndarray, arm: int) -> float:
    return float(arm_means(cfg, context)[check_arm(arm)])


def optimal_mean(cfg: WheelConfig, context: np.ndarray) -> float:
    return float(arm_means(cfg, context).max())


def wheel_step(
    cfg: WheelConfig, rng: np.random.Generator, arm: int, context: np.ndarray | None = None
) -> tuple[np.ndarray, float, float]:
    """(context used, reward, optimal mean); a context is drawn from rng when none is given"""
    arm = check_arm(arm)
    context = sample_contexts(rng, 1)[0] if context is None else np.asarray(context, dtype=np.float64)
    reward = arm_mean(cfg, context, arm) + cfg.reward_std * rng.standard_normal()
    return context, float(reward), optimal_mean(cfg, context)


@dataclass(frozen=True)
class WheelEnvironment:
    """Wheel with counterfactual streams: the context of round t and the reward of (t, arm) depend only on
    (seed, t) and (seed, t, arm), so every policy on the same seed faces the same draws"""

    cfg: WheelConfig

    def context(self, t: int) -> np.ndarray:
        self.__check_round(t)
        return sample_contexts(np.random.default_rng([self.cfg.seed, CONTEXT_STREAM, t]), 1)[0]

    def pull(self, t: int, arm: int) -> tuple[float, float, float]:
        """(reward, chosen arm mean, optimal mean) for round t"""
        self.__check_round(t)
        arm = check_arm(arm)
        context = self.context(t)
        rng = np.random.default_rng([self.cfg.seed, REWARD_STREAM, t, arm])
        _, reward, best = wheel_step(self.cfg, rng, arm, context)
        return reward, arm_mean(self.cfg, context, arm), best

    def __check_round(self, t: int) -> None:
        if not 0 <= t < self.cfg.horizon:
            raise ProtocolError(f"round {t} outside horizon {self.cfg.horizon}")


def high_reward_frequency(delta: float, n: int, seed: int) -> float:
    """Fraction of n uniform disk contexts with norm above delta; 1 - delta^2 in expectation"""
    contexts = sample_contexts(np.random.default_rng(seed), n)
    return float(np.mean(np.linalg.norm(contexts, axis=1) > delta))
