"""Multi-agent DDPG for the DO and PAC dosage set-points."""
from .buffer import Batch, ReplayBuffer, Transition
from .maddpg import (AGENT_NAMES, AgentNets, ObservationScaler, TrainConfig, act,
                     build_observation, joint_observation, make_agents, td_targets,
                     update_actor, update_critic)
from .nets import MLP, Adam, init_mlp, mlp_forward, mlp_gradients, soft_update
from .train import (LOG_COLUMNS, TrainingLog, TrainResult, load_agents, moving_average,
                    save_agents, train)

__all__ = [
    "AGENT_NAMES", "LOG_COLUMNS", "MLP", "Adam", "AgentNets", "Batch", "ObservationScaler",
    "ReplayBuffer", "TrainConfig", "TrainResult", "TrainingLog", "Transition", "act",
    "build_observation", "init_mlp", "joint_observation", "load_agents", "make_agents",
    "mlp_forward", "mlp_gradients", "moving_average", "save_agents", "soft_update", "td_targets",
    "train", "update_actor", "update_critic",
]
