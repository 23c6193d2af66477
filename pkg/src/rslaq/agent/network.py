"""Q-networks: the convolutional model over the state matrix and a lookup table."""

from __future__ import annotations

from typing import Sequence

import torch
from torch import nn

DEFAULT_CHANNELS = (16, 32, 32, 64)


class ConvQNetwork(nn.Module):
    """Four 3x3 conv stages (each with batch norm and tanh) and a linear head.

    Padding keeps the 4 x (J+1) spatial shape, so the head sees
    ``channels[-1] * 4 * (J+1)`` features.
    """

    def __init__(self, state_shape: Sequence[int], n_actions: int, channels: Sequence[int] = DEFAULT_CHANNELS):
        super().__init__()
        if len(state_shape) != 2:
            raise ValueError(f"state must be a matrix, got shape {tuple(state_shape)}")
        self.state_shape = tuple(int(d) for d in state_shape)
        self.n_actions = int(n_actions)
        layers: list[nn.Module] = []
        c_in = 1
        for c_out in channels:
            layers += [nn.Conv2d(c_in, c_out, kernel_size=3, stride=1, padding=1), nn.BatchNorm2d(c_out), nn.Tanh()]
            c_in = c_out
        self.features = nn.Sequential(*layers)
        self.head = nn.Linear(c_in * self.state_shape[0] * self.state_shape[1], self.n_actions)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        if x.dim() == 2:
            x = x.unsqueeze(0)
        x = x.unsqueeze(1)
        return self.head(self.features(x).flatten(1))


class TabularQNetwork(nn.Module):
    """One Q-value per (state, action); states are one-hot vectors."""

    def __init__(self, state_shape: Sequence[int], n_actions: int):
        super().__init__()
        n_states = int(torch.tensor(state_shape).prod())
        self.state_shape = tuple(state_shape)
        self.n_actions = int(n_actions)
        self.table = nn.Parameter(torch.zeros(n_states, n_actions))

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        x = x.reshape(-1, self.table.shape[0])
        return x @ self.table


def build_network(kind, state_shape, n_actions, channels=DEFAULT_CHANNELS) -> nn.Module:
    if callable(kind):
        return kind(state_shape, n_actions)
    if kind == "conv":
        return ConvQNetwork(state_shape, n_actions, channels)
    if kind == "tabular":
        return TabularQNetwork(state_shape, n_actions)
    raise ValueError(f"unknown network kind {kind!r}")
