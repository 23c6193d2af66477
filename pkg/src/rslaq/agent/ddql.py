"""Double deep Q-learning with experience replay, as an sklearn-style estimator."""

from __future__ import annotations

import copy
import csv
import json
import logging
import math
from dataclasses import dataclass

import numpy as np
import torch
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .network import DEFAULT_CHANNELS, build_network
from .replay import ReplayBuffer

logger = logging.getLogger(__name__)

DTYPE = torch.float64
LOG_FIELDS = ("step", "epsilon", "loss", "reward", "kind")
CHECKPOINT_FORMAT = "rslaq-checkpoint"
CHECKPOINT_VERSION = 1


@dataclass(frozen=True)
class Hyperparams:
    """Learning settings; see :class:`DDQLAgent` for meanings."""

    n_steps: int = 300
    memory_size: int = 500
    gamma: float = 0.85
    epsilon: float = 0.1
    epsilon_decay: float = 0.995
    epsilon_min: float = 0.01
    batch_size: int = 32
    target_sync: int = 20
    reset_period: int = 300
    learning_rate: float = 1e-3

    def validate(self):
        if not 0 < self.gamma < 1:
            raise ValueError("gamma must lie in (0, 1)")
        if not 0 <= self.epsilon_min <= self.epsilon <= 1:
            raise ValueError("need 0 <= epsilon_min <= epsilon <= 1")
        if not 0 < self.epsilon_decay <= 1:
            raise ValueError("epsilon_decay must lie in (0, 1]")
        if self.batch_size < 1 or self.batch_size > self.memory_size:
            raise ValueError("need 1 <= batch_size <= memory_size")
        if self.target_sync < 1 or self.reset_period < 1:
            raise ValueError("target_sync and reset_period must be >= 1")
        if self.n_steps < 0:
            raise ValueError("n_steps must be >= 0")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be > 0")
        return self


def _tensor(x) -> torch.Tensor:
    return torch.as_tensor(np.asarray(x, dtype=float), dtype=DTYPE)


def q_values(net: torch.nn.Module, states) -> np.ndarray:
    """Inference-mode forward pass (batch-norm running statistics)."""
    was_training = net.training
    net.eval()
    with torch.no_grad():
        out = net(_tensor(states)).numpy()
    net.train(was_training)
    return out


def greedy(q: np.ndarray) -> np.ndarray:
    """Argmax per row; ties go to the lowest action id."""
    return np.argmax(np.atleast_2d(q), axis=1)


def select_action(net, state, epsilon: float, rng: np.random.Generator, n_actions: int | None = None) -> int:
    if n_actions is None:
        n_actions = net.n_actions
    if epsilon > 0 and rng.random() < epsilon:
        return int(rng.integers(n_actions))
    return int(greedy(q_values(net, state[None]))[0])


def td_target(rewards, next_states, terminals, online, target, gamma: float, double: bool = True) -> np.ndarray:
    """Bootstrapped targets; terminal transitions keep only the reward.

    With ``double=True`` the online network picks the next action and the
    target network scores it; otherwise the target network's max is used.
    """
    rewards = np.asarray(rewards, dtype=float)
    terminals = np.asarray(terminals, dtype=bool)
    q_next_target = q_values(target, next_states)
    if double:
        a_star = greedy(q_values(online, next_states))
        bootstrap = q_next_target[np.arange(len(rewards)), a_star]
    else:
        bootstrap = q_next_target.max(axis=1)
    return np.where(terminals, rewards, rewards + gamma * bootstrap)


def epsilon_decay(epsilon: float, decay: float, epsilon_min: float) -> float:
    return max(epsilon_min, epsilon * decay)


def sync_target(online: torch.nn.Module, target: torch.nn.Module):
    target.load_state_dict(online.state_dict())


def loss_on_batch(net, states, actions, targets) -> torch.Tensor:
    """Mean squared TD error on the taken actions (training-mode forward)."""
    net.train()
    q = net(_tensor(states))
    q_taken = q.gather(1, torch.as_tensor(actions, dtype=torch.long).view(-1, 1)).squeeze(1)
    return torch.mean((_tensor(targets) - q_taken) ** 2)


def train_step(buffer: ReplayBuffer, online, target, optimizer, hp: Hyperparams, double: bool = True) -> float | None:
    """One gradient update from a uniform minibatch; ``None`` if the buffer is too small."""
    if len(buffer) <= hp.batch_size:
        return None
    states, actions, rewards, next_states, terminals = buffer.sample(hp.batch_size)
    targets = td_target(rewards, next_states, terminals, online, target, hp.gamma, double)
    optimizer.zero_grad()
    loss = loss_on_batch(online, states, actions, targets)
    value = float(loss.detach())
    if not math.isfinite(value):
        raise FloatingPointError(f"non-finite loss {value} (rewards range {rewards.min()}..{rewards.max()})")
    loss.backward()
    optimizer.step()
    return value


def check_states(states, state_shape) -> np.ndarray:
    """Coerce to a float array of shape (n, *state_shape)."""
    X = np.asarray(states, dtype=float)
    if X.shape == tuple(state_shape):
        X = X[None]
    if X.shape[1:] != tuple(state_shape):
        raise ValueError(f"expected states of shape (n, {', '.join(map(str, state_shape))}), got {X.shape}")
    if not np.all(np.isfinite(X)):
        raise ValueError("states contain NaN or infinite values")
    return X


class DDQLAgent(BaseEstimator):
    """Double deep Q-learning agent with experience replay.

    ``fit(env)`` runs the learning loop on an environment exposing
    ``reset() -> state``, ``step(action) -> (state, outcome)`` (``outcome``
    has ``value``, ``terminal`` and optionally ``kind``), ``n_actions`` and
    ``state_shape``. ``predict(states)`` returns greedy action ids.

    Parameters
    ----------
    n_steps : int
        Learning steps (environment interactions).
    memory_size : int
        Replay capacity; the oldest transitions are evicted first.
    gamma : float
        Discount factor.
    epsilon, epsilon_decay, epsilon_min : float
        Exploration rate, its multiplicative decay after each update, and its floor.
    batch_size : int
        Minibatch size; updates start once the buffer holds more than this.
    target_sync : int
        Copy online weights into the target network every this many steps.
    reset_period : int
        Reset the environment every this many steps.
    reset_on_terminal : bool
        Also reset the environment after any terminal outcome.
    learning_rate : float
        Adam step size.
    double_q : bool
        Double-Q targets (online argmax, target evaluation); False uses the target max.
    network : {"conv", "tabular"} or callable
        Q-network architecture, or a factory ``(state_shape, n_actions) -> nn.Module``.
    channels : tuple of int
        Convolution widths for the conv network.
    random_state : int
        Seed for weight init, exploration and minibatch sampling.
    """

    def __init__(self, n_steps=300, memory_size=500, gamma=0.85, epsilon=0.1, epsilon_decay=0.995,
                 epsilon_min=0.01, batch_size=32, target_sync=20, reset_period=300, reset_on_terminal=True,
                 learning_rate=1e-3, double_q=True, network="conv", channels=DEFAULT_CHANNELS, random_state=0):
        self.n_steps = n_steps
        self.memory_size = memory_size
        self.gamma = gamma
        self.epsilon = epsilon
        self.epsilon_decay = epsilon_decay
        self.epsilon_min = epsilon_min
        self.batch_size = batch_size
        self.target_sync = target_sync
        self.reset_period = reset_period
        self.reset_on_terminal = reset_on_terminal
        self.learning_rate = learning_rate
        self.double_q = double_q
        self.network = network
        self.channels = channels
        self.random_state = random_state

    @property
    def hyperparams(self) -> Hyperparams:
        return Hyperparams(self.n_steps, self.memory_size, self.gamma, self.epsilon, self.epsilon_decay,
                           self.epsilon_min, self.batch_size, self.target_sync, self.reset_period,
                           self.learning_rate).validate()

    def _init_networks(self, state_shape, n_actions):
        seed = int(np.random.SeedSequence(self.random_state).generate_state(1)[0])
        with torch.random.fork_rng(devices=[]):
            torch.manual_seed(seed)
            online = build_network(self.network, state_shape, n_actions, tuple(self.channels)).to(DTYPE)
        target = copy.deepcopy(online)
        self.q_network_ = online
        self.target_network_ = target
        self.state_shape_ = tuple(state_shape)
        self.n_actions_ = int(n_actions)

    def fit(self, env, y=None):
        hp = self.hyperparams
        self._init_networks(env.state_shape, env.n_actions)
        rng_seq = np.random.SeedSequence(self.random_state)
        explore_seed, replay_seed = rng_seq.spawn(2)
        self._explore_rng = np.random.default_rng(explore_seed)
        self.memory_ = ReplayBuffer(hp.memory_size, np.random.default_rng(replay_seed))
        self.optimizer_ = torch.optim.Adam(self.q_network_.parameters(), lr=hp.learning_rate)
        self.epsilon_ = hp.epsilon
        self.log_: list[dict] = []
        self.n_updates_ = 0
        self._learn(env, hp)
        self.rewards_ = np.array([row["reward"] for row in self.log_])
        return self

    def _learn(self, env, hp: Hyperparams):
        online, target = self.q_network_, self.target_network_
        state = np.asarray(env.reset(), dtype=float)
        for step in range(1, hp.n_steps + 1):
            action = select_action(online, state, self.epsilon_, self._explore_rng, self.n_actions_)
            next_state, outcome = env.step(action)
            next_state = np.asarray(next_state, dtype=float)
            reward, terminal = float(outcome.value), bool(outcome.terminal)
            # the periodic reset truncates the bootstrap like a reward terminal
            forced = step % hp.reset_period == 0
            self.memory_.add(state, action, reward, next_state, terminal or forced)

            loss = None
            if len(self.memory_) > hp.batch_size:
                loss = train_step(self.memory_, online, target, self.optimizer_, hp, self.double_q)
                self.n_updates_ += 1
                self.epsilon_ = epsilon_decay(self.epsilon_, hp.epsilon_decay, hp.epsilon_min)
            if step % hp.target_sync == 0:
                sync_target(online, target)

            kind = getattr(outcome, "kind", "terminal" if terminal else "normal")
            self.log_.append({"step": step, "epsilon": self.epsilon_, "loss": loss, "reward": reward,
                              "kind": getattr(kind, "value", kind), "action": action})
            if (terminal and self.reset_on_terminal) or forced:
                state = np.asarray(env.reset(), dtype=float)
            else:
                state = next_state

    def decision_function(self, states) -> np.ndarray:
        check_is_fitted(self, "q_network_")
        return q_values(self.q_network_, check_states(states, self.state_shape_))

    def predict(self, states) -> np.ndarray:
        return greedy(self.decision_function(states))

    def act(self, state) -> int:
        """Greedy action for a single state."""
        return int(self.predict(state)[0])

    # ------------------------------------------------------------- persistence
    def write_log(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(LOG_FIELDS)
            for row in getattr(self, "log_", []):
                loss = "" if row["loss"] is None else repr(row["loss"])
                writer.writerow((row["step"], repr(row["epsilon"]), loss, repr(row["reward"]), row["kind"]))

    def save(self, path):
        """Write an ``.npz`` checkpoint.

        Layout: ``__meta__`` holds a JSON header (format, version, estimator
        params, state shape, action count and the ordered parameter names);
        each ``online/<name>`` array holds one state-dict entry in float64,
        row-major, in that order.
        """
        check_is_fitted(self, "q_network_")
        if callable(self.network):
            raise ValueError("cannot checkpoint a custom network factory")
        state = self.q_network_.state_dict()
        params = self.get_params()
        params["channels"] = list(params["channels"])
        meta = {
            "format": CHECKPOINT_FORMAT,
            "version": CHECKPOINT_VERSION,
            "params": params,
            "state_shape": list(self.state_shape_),
            "n_actions": self.n_actions_,
            "order": list(state.keys()),
            "dtypes": {k: str(v.dtype).replace("torch.", "") for k, v in state.items()},
        }
        arrays = {f"online/{k}": v.detach().cpu().numpy() for k, v in state.items()}
        with open(path, "wb") as fh:
            np.savez(fh, __meta__=np.array(json.dumps(meta, sort_keys=True)), **arrays)

    @classmethod
    def load(cls, path) -> "DDQLAgent":
        with np.load(path, allow_pickle=False) as data:
            meta = json.loads(str(data["__meta__"]))
            if meta.get("format") != CHECKPOINT_FORMAT or meta.get("version") != CHECKPOINT_VERSION:
                raise ValueError(f"{path} is not a version {CHECKPOINT_VERSION} checkpoint")
            params = meta["params"]
            params["channels"] = tuple(params["channels"])
            agent = cls(**params)
            agent._init_networks(tuple(meta["state_shape"]), meta["n_actions"])
            state = {}
            for k in meta["order"]:
                arr = data[f"online/{k}"]
                state[k] = torch.from_numpy(arr.copy())
        agent.q_network_.load_state_dict(state)
        sync_target(agent.q_network_, agent.target_network_)
        return agent
