""" Script to run bandit episodes and summarize final cumulative regret across seeds """

import json
import logging
import pathlib
import numpy as np
import pandas as pd
from dataclasses import dataclass, field, replace

from .agent import AgentConfig, Policy, ThompsonAgent
from .wheel import ProtocolError, WheelConfig, WheelEnvironment, arm_means

TRACE_COLUMNS = ["round", "x1", "x2", "arm", "reward", "instant_regret", "cum_regret"]


@dataclass(frozen=True)
class BanditRound:
    round: int
    context: tuple[float, float]
    arm: int
    reward: float
    instant_regret: float

    def __post_init__(self):
        if self.instant_regret < 0:
            raise ProtocolError(f"negative instant regret {self.instant_regret} at round {self.round}")


@dataclass
class BanditTrace:
    seed: int
    rounds: list[BanditRound] = field(default_factory=list)

    @property
    def cumulative_regret(self) -> np.ndarray:
        return np.cumsum([r.instant_regret for r in self.rounds])

    @property
    def final_regret(self) -> float:
        return float(self.cumulative_regret[-1]) if self.rounds else 0.0

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            {
                "round": [r.round for r in self.rounds],
                "x1": [r.context[0] for r in self.rounds],
                "x2": [r.context[1] for r in self.rounds],
                "arm": [r.arm for r in self.rounds],
                "reward": [r.reward for r in self.rounds],
                "instant_regret": [r.instant_regret for r in self.rounds],
                "cum_regret": self.cumulative_regret,
            },
            columns=TRACE_COLUMNS,
        )


class OraclePolicy:
    """Plays the arm with the largest true mean"""

    def __init__(self, cfg: WheelConfig) -> None:
        self.cfg = cfg

    def select(self, t: int, context: np.ndarray) -> int:
        return int(np.argmax(arm_means(self.cfg, context)))

    def observe(self, t: int, context: np.ndarray, arm: int, reward: float) -> None:
        pass


def run_episode(env: WheelEnvironment, policy: Policy) -> BanditTrace:
    trace = BanditTrace(env.cfg.seed)
    for t in range(env.cfg.horizon):
        context = env.context(t)
        arm = policy.select(t, context)
        reward, chosen_mean, best_mean = env.pull(t, arm)
        trace.rounds.append(BanditRound(t, (float(context[0]), float(context[1])), int(arm), reward, best_mean - chosen_mean))
        policy.observe(t, context, arm, reward)
    return trace


def run_seed(wheel: WheelConfig, agent: AgentConfig, seed: int) -> BanditTrace:
    """One Thompson episode where the environment and the agent both take the given seed"""
    if wheel.horizon < agent.warm_rounds:
        raise ProtocolError(f"horizon {wheel.horizon} is shorter than the {agent.warm_rounds} warm-start rounds")
    trace = run_episode(WheelEnvironment(replace(wheel, seed=seed)), ThompsonAgent(replace(agent, seed=seed)))
    logging.info(f"bandit {agent.posterior.label} k={agent.k} seed {seed}: final regret {trace.final_regret:.2f}")
    return trace


@dataclass(frozen=True)
class BanditSummary:
    posterior: str
    k: int | None
    seeds: tuple[int, ...]
    finals: tuple[float, ...]
    mean: float = field(init=False)
    stderr: float = field(init=False)

    def __post_init__(self):
        finals = np.asarray(self.finals, dtype=np.float64)
        object.__setattr__(self, "mean", float(finals.mean()))
        stderr = float(finals.std(ddof=1) / np.sqrt(finals.shape[0])) if finals.shape[0] > 1 else 0.0
        object.__setattr__(self, "stderr", stderr)

    @property
    def ci95(self) -> float:
        return 1.96 * self.stderr

    def to_dict(self) -> dict:
        return {
            "posterior": self.posterior,
            "k": self.k,
            "per_seed_final_regret": dict(zip((str(s) for s in self.seeds), self.finals)),
            "mean": self.mean,
            "stderr": self.stderr,
            "ci95": self.ci95,
        }


def summarize(agent: AgentConfig, traces: dict[int, BanditTrace]) -> BanditSummary:
    seeds = tuple(sorted(traces))
    k = agent.k if agent.posterior.uses_k else None
    return BanditSummary(agent.posterior.label, k, seeds, tuple(traces[s].final_regret for s in seeds))


def run_bandit(
    wheel: WheelConfig, agent: AgentConfig, seeds: list[int]
) -> tuple[dict[int, BanditTrace], BanditSummary]:
    if not seeds:
        raise ValueError("run_bandit needs at least one seed")
    traces = {seed: run_seed(wheel, agent, seed) for seed in seeds}
    return traces, summarize(agent, traces)


def write_summary(summaries: list[BanditSummary], path: str | pathlib.Path, extra: dict | None = None) -> pathlib.Path:
    path = pathlib.Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as f:
        json.dump({**(extra or {}), "summaries": [s.to_dict() for s in summaries]}, f, indent=2, sort_keys=True)
    return path
