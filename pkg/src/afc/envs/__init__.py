"""Environments exposing per-pseudo-environment observations, actions and force records."""
from afc.envs.base import EpisodeConfig, Environment, ForceRecord, Observation, partition_observation
from afc.envs.cylinder import CylinderEnv, CylinderEnvConfig, run_baseline
from afc.envs.oscillator import OscillatorEnv, OscillatorLatticeConfig, oscillator_step

__all__ = [
    "CylinderEnv", "CylinderEnvConfig", "EpisodeConfig", "Environment", "ForceRecord", "Observation",
    "OscillatorEnv", "OscillatorLatticeConfig", "oscillator_step", "partition_observation", "run_baseline",
]
