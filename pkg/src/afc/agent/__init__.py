"""PPO actor-critic written directly on numpy."""
from afc.agent.mlp import MlpParams
from afc.agent.policy import Agent, PolicyOutput, log_prob, policy_forward, sample_action, value_forward
from afc.agent.ppo import PpoConfig, PpoLearner, Trajectory, compute_gae, ppo_update

__all__ = [
    "Agent", "MlpParams", "PolicyOutput", "PpoConfig", "PpoLearner", "Trajectory", "compute_gae",
    "log_prob", "policy_forward", "ppo_update", "sample_action", "value_forward",
]
