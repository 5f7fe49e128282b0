from dataclasses import dataclass

# Wheel environment defaults
DELTA = 0.95
MU_CENTER = 1.0
MU_HIGH = 50.0
REWARD_STD = 0.01
N_ARMS = 5
CONTEXT_DIM = 2

# Agent network: context followed by a one-hot arm code, two hidden ReLU layers
INPUT_DIM = CONTEXT_DIM + N_ARMS
HIDDEN_WIDTHS = (100, 100)
EXPECTED_P = 11001

# Agent schedule and optimizer
WARM_PULLS_PER_ARM = 3
INTERACT_STEPS = 20
SGD_UPDATES = 100
REPLAY_BATCH = 512
LEARNING_RATE = 3e-3
GRAD_CLIP = 1.0
RESIDUAL_WINDOW = 200
NOISE_VAR_FLOOR = 1e-6
PRIOR_PRECISION = 1.0

# Independent random streams derived from a seed: SeedSequence([seed, stream, ...])
CONTEXT_STREAM = 0
REWARD_STREAM = 1
AGENT_STREAM = 2
REPLAY_STREAM = 3


@dataclass(frozen=True)
class QuadrantArm:
    """
    Outer arm paired with the sign pattern of the context it pays off for; zero counts as positive
    """

    arm: int
    x1_sign: int
    x2_sign: int


QUADRANT_ARMS = [
    QuadrantArm(1, 1, 1),
    QuadrantArm(2, -1, 1),
    QuadrantArm(3, -1, -1),
    QuadrantArm(4, 1, -1),
]
