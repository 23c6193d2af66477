from .ddql import (DDQLAgent, Hyperparams, epsilon_decay, greedy, q_values, select_action, sync_target,
                   td_target, train_step)
from .network import ConvQNetwork, TabularQNetwork
from .replay import Experience, ReplayBuffer

__all__ = [
    "ConvQNetwork", "DDQLAgent", "Experience", "Hyperparams", "ReplayBuffer", "TabularQNetwork",
    "epsilon_decay", "greedy", "q_values", "select_action", "sync_target", "td_target", "train_step",
]
