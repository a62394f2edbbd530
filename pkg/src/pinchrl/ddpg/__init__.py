from .agent import Agent, AgentConfig, EpisodeLog, TrainResult, actor_update, critic_update, train
from .checkpoint import CheckpointError, load_checkpoint, read_header, save_checkpoint
from .mlp import Adam, Mlp, mlp_backward, mlp_forward, soft_update
from .replay import Batch, ReplayBuffer, Transition

__all__ = [
    "Adam", "Agent", "CheckpointError", "AgentConfig", "Batch", "EpisodeLog", "Mlp", "ReplayBuffer", "TrainResult",
    "Transition", "actor_update", "critic_update", "load_checkpoint", "mlp_backward", "read_header", "mlp_forward",
    "save_checkpoint", "soft_update", "train",
]
