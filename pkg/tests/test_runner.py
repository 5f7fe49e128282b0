import json
import numpy as np
import pytest

from sublaplace.bandit.agent import AgentConfig, Posterior, ThompsonAgent
from sublaplace.bandit.runner import (
    TRACE_COLUMNS,
    BanditRound,
    BanditSummary,
    OraclePolicy,
    run_bandit,
    run_episode,
    run_seed,
    summarize,
    write_summary,
)
from sublaplace.bandit.wheel import ProtocolError, WheelConfig, WheelEnvironment

SMALL = AgentConfig(k=20, interact_steps=5, sgd_updates=5, replay_batch=16, hidden_widths=(4,))


def test_warm_start_only_horizon():
    env = WheelEnvironment(WheelConfig(horizon=15, seed=0))
    agent = ThompsonAgent(AgentConfig())
    trace = run_episode(env, agent)
    assert len(trace.rounds) == 15
    assert agent.phases == 0


def test_oracle_policy_has_no_regret():
    cfg = WheelConfig(horizon=300, seed=4, delta=0.5)
    trace = run_episode(WheelEnvironment(cfg), OraclePolicy(cfg))
    assert trace.final_regret == 0.0
    assert any(r.reward > 25 for r in trace.rounds)


def test_trace_frame_and_regret_invariants():
    trace = run_seed(WheelConfig(horizon=40), SMALL, seed=2)
    frame = trace.to_frame()
    assert list(frame.columns) == TRACE_COLUMNS
    assert len(frame) == 40
    assert np.all(frame["instant_regret"] >= 0)
    assert np.all(np.diff(frame["cum_regret"]) >= 0)
    assert frame["cum_regret"].iloc[-1] == pytest.approx(trace.final_regret)


def test_seed_determines_the_trace():
    first = run_seed(WheelConfig(horizon=30), SMALL, seed=6).to_frame()
    second = run_seed(WheelConfig(horizon=30), SMALL, seed=6).to_frame()
    assert first.equals(second)


def test_horizon_shorter_than_warm_start():
    with pytest.raises(ProtocolError):
        run_seed(WheelConfig(horizon=10), SMALL, seed=0)


def test_negative_regret_is_a_protocol_error():
    with pytest.raises(ProtocolError):
        BanditRound(0, (0.0, 0.0), 1, 1.0, -0.5)


def test_summary_statistics(tmp_path):
    traces, summary = run_bandit(WheelConfig(horizon=20), SMALL, seeds=[0, 1, 2])
    finals = [traces[s].final_regret for s in (0, 1, 2)]
    assert summary.seeds == (0, 1, 2)
    assert summary.mean == pytest.approx(np.mean(finals))
    assert summary.stderr == pytest.approx(np.std(finals, ddof=1) / np.sqrt(3))
    assert summary.ci95 == pytest.approx(1.96 * summary.stderr)

    map_summary = summarize(AgentConfig(posterior=Posterior.MAP), {0: traces[0]})
    assert map_summary.k is None and map_summary.stderr == 0.0

    path = write_summary([summary, map_summary], tmp_path / "summary.json", {"delta": 0.95})
    with open(path) as f:
        body = json.load(f)
    assert body["delta"] == 0.95
    assert body["summaries"][0]["per_seed_final_regret"]["1"] == pytest.approx(finals[1])


def test_summary_of_known_finals():
    summary = BanditSummary("gradient_laplace", 500, (0, 1), (10.0, 14.0))
    assert summary.mean == 12.0
    assert summary.stderr == pytest.approx(2.0)
    assert summary.to_dict()["ci95"] == pytest.approx(3.92)


@pytest.mark.slow
def test_gradient_laplace_has_the_lowest_regret():
    wheel = WheelConfig(delta=0.95, horizon=2000)
    seeds = list(range(10))
    summaries = {
        posterior: run_bandit(wheel, AgentConfig(posterior=posterior, k=500), seeds)[1]
        for posterior in (Posterior.GRADIENT_LAPLACE, Posterior.SUBNET_DIAGONAL, Posterior.MAP)
    }
    best = summaries[Posterior.GRADIENT_LAPLACE]
    for posterior in (Posterior.SUBNET_DIAGONAL, Posterior.MAP):
        other = summaries[posterior]
        pooled = np.sqrt(best.stderr**2 + other.stderr**2)
        assert other.mean - best.mean > pooled, f"{posterior.label}: {other.mean:.1f} vs {best.mean:.1f}"
