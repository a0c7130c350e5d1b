"""Rollout coordination, training and evaluation."""
from afc.orchestrator.config import RunConfig, load_config
from afc.orchestrator.protocol import MessageType, WireMessage, decode_message, encode_message
from afc.orchestrator.rollout import EpisodeResult, RolloutWorker, make_workers, run_episode
from afc.orchestrator.training import evaluate, train

__all__ = [
    "EpisodeResult", "MessageType", "RolloutWorker", "RunConfig", "WireMessage", "decode_message",
    "encode_message", "evaluate", "load_config", "make_workers", "run_episode", "train",
]
