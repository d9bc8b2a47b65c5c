"""Multi-user bandit learning when rewards are only visible as sums over groups of users."""

from anonbandits.env import (
    AnonymityViolation,
    Environment,
    GroupPartition,
    Instance,
    InvalidArm,
    RewardFamily,
    gen_clustered_instance,
    gen_hard_instance,
    gen_linear_instance,
    gen_uniform_instance,
    pseudo_regret,
)
from anonbandits.learners import Alg1Config, run_alg1, run_etc, run_ucb

__all__ = [
    "AnonymityViolation",
    "Alg1Config",
    "Environment",
    "GroupPartition",
    "Instance",
    "InvalidArm",
    "RewardFamily",
    "gen_clustered_instance",
    "gen_hard_instance",
    "gen_linear_instance",
    "gen_uniform_instance",
    "pseudo_regret",
    "run_alg1",
    "run_etc",
    "run_ucb",
]
