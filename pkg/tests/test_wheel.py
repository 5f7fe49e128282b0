import numpy as np
import pytest

from sublaplace.bandit.wheel import (
    ProtocolError,
    WheelConfig,
    WheelEnvironment,
    arm_means,
    check_arm,
    high_reward_frequency,
    optimal_mean,
    quadrant_arm,
    sample_contexts,
    wheel_step,
)

OUTER_Q1 = np.array([0.97, 0.97]) / np.sqrt(2)


def test_outer_context_pays_the_quadrant_arm():
    cfg = WheelConfig()
    means = arm_means(cfg, OUTER_Q1)
    assert np.array_equal(means, [1.0, 50.0, 1.0, 1.0, 1.0])
    context, reward, best = wheel_step(cfg, np.random.default_rng(0), 1, OUTER_Q1)
    assert np.array_equal(context, OUTER_Q1)
    assert reward == pytest.approx(50.0, abs=0.06)
    assert best == 50.0


def test_inner_context_has_equal_means():
    cfg = WheelConfig()
    inner = np.array([0.3, 0.0])
    assert np.array_equal(arm_means(cfg, inner), np.ones(5))
    assert optimal_mean(cfg, inner) == 1.0
    assert arm_means(WheelConfig(inner_center_bonus=0.2), inner)[0] == pytest.approx(1.2)


@pytest.mark.parametrize(
    "context,arm", [((0.5, 0.5), 1), ((-0.5, 0.5), 2), ((-0.5, -0.5), 3), ((0.5, -0.5), 4), ((0.0, -0.0), 1)]
)
def test_quadrant_arms(context, arm):
    assert quadrant_arm(np.array(context)) == arm


def test_high_reward_area():
    assert high_reward_frequency(0.95, 1_000_000, seed=0) == pytest.approx(1 - 0.95**2, abs=1e-3)


def test_contexts_lie_on_the_disk():
    contexts = sample_contexts(np.random.default_rng(3), 1001)
    assert contexts.shape == (1001, 2)
    assert np.all(np.linalg.norm(contexts, axis=1) <= 1.0)


@pytest.mark.parametrize("arm", [-1, 5, 1.0, "1"])
def test_invalid_arms(arm):
    with pytest.raises(ProtocolError):
        check_arm(arm)


def test_environment_streams_are_keyed_by_round_and_arm():
    env = WheelEnvironment(WheelConfig(horizon=10, seed=7))
    assert np.array_equal(env.context(3), env.context(3))
    assert not np.array_equal(env.context(3), env.context(4))
    assert env.pull(3, 2) == env.pull(3, 2)
    assert env.pull(3, 2)[0] != env.pull(3, 1)[0]
    other = WheelEnvironment(WheelConfig(horizon=10, seed=8))
    assert not np.array_equal(env.context(3), other.context(3))


def test_environment_rejects_rounds_outside_horizon():
    env = WheelEnvironment(WheelConfig(horizon=10))
    with pytest.raises(ProtocolError):
        env.context(10)
    with pytest.raises(ProtocolError):
        env.pull(0, 7)


def test_config_validation():
    with pytest.raises(ValueError):
        WheelConfig(delta=1.0)
    with pytest.raises(ValueError):
        WheelConfig(mu_high=1.0)
    WheelConfig(delta=0.9)
