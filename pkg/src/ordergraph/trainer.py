"""Deep Q-learning on the order graph.

One Q-model per order-graph layer: the model at index ``j`` serves states
holding ``j`` variables. A training episode walks from the empty state to the
full one with the ε-greedy rule below, stores the ``d`` transitions in a
replay buffer, then refits every layer on a batch drawn from its own
transitions against targets computed by the next layer's live model::

    y = log R(a)                                   if s' is the full state
    y = log R(a) + logsumexp_{a' feasible} Q(s', a')  otherwise

ε follows the convention of sampling from the model's own distribution with
probability ε and uniformly otherwise.
"""

import json
import logging
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import List, NamedTuple, Optional, Tuple

import numpy as np
from scipy.special import logsumexp

from .errors import Diverged, EmptyLayer
from .exact import TransitionDistribution
from .order_graph import Ordering, feasible_actions, full_state, layer
from .qfunction import MLPQModel, QModel, TabularQModel, forward_masked, mask_outputs, transition_distribution
from .scoring import BICScorer

log = logging.getLogger(__name__)


class Transition(NamedTuple):
    state: int
    action: int
    next_state: int
    log_reward: float


class TransitionBatch(NamedTuple):
    states: np.ndarray
    actions: np.ndarray
    next_states: np.ndarray
    log_rewards: np.ndarray

    def __len__(self):
        return len(self.states)

    def __iter__(self):
        for row in zip(self.states, self.actions, self.next_states, self.log_rewards):
            yield Transition(int(row[0]), int(row[1]), int(row[2]), float(row[3]))


class ReplayBuffer:
    """Fixed-capacity FIFO ring of transitions, tagged with the source state's layer."""

    def __init__(self, capacity: int):
        if capacity <= 0:
            raise ValueError("capacity must be positive")
        self.capacity = capacity
        self.states = np.zeros(capacity, dtype=np.int64)
        self.actions = np.zeros(capacity, dtype=np.int64)
        self.next_states = np.zeros(capacity, dtype=np.int64)
        self.log_rewards = np.zeros(capacity)
        self.layers = np.zeros(capacity, dtype=np.int64)
        self.size = 0
        self._pos = 0

    def __len__(self):
        return self.size

    def add(self, t: Transition) -> None:
        i = self._pos
        self.states[i], self.actions[i], self.next_states[i] = t.state, t.action, t.next_state
        self.log_rewards[i] = t.log_reward
        self.layers[i] = layer(t.state)
        self._pos = (i + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)

    def transitions(self) -> List[Transition]:
        """Current contents, oldest first."""
        start = self._pos if self.size == self.capacity else 0
        idx = (start + np.arange(self.size)) % self.capacity
        return list(self._batch(idx))

    def layer_indices(self, j: int) -> np.ndarray:
        return np.flatnonzero(self.layers[: self.size] == j)

    def _batch(self, idx) -> TransitionBatch:
        return TransitionBatch(self.states[idx], self.actions[idx], self.next_states[idx], self.log_rewards[idx])


def buffer_sample(buffer: ReplayBuffer, j: int, m: int, rng: np.random.Generator) -> TransitionBatch:
    """``m`` uniform draws, with replacement, among transitions leaving layer ``j``."""
    idx = buffer.layer_indices(j)
    if len(idx) == 0:
        raise EmptyLayer(f"no buffered transitions leave layer {j}")
    return buffer._batch(idx[rng.integers(len(idx), size=m)])


class LayeredQModels:
    """``models[j]`` evaluates states with exactly ``j`` ordered variables."""

    def __init__(self, models: List[QModel]):
        d = len(models)
        if any(m.d != d for m in models):
            raise ValueError("every layer model must have input width d = number of models")
        self.models = list(models)
        self.d = d

    def __len__(self):
        return self.d

    def __getitem__(self, j) -> QModel:
        return self.models[j]

    def model_for(self, state: int) -> QModel:
        return self.models[layer(state)]

    def distribution(self, state: int) -> TransitionDistribution:
        return transition_distribution(forward_masked(self.model_for(state), state))

    def params(self) -> List[np.ndarray]:
        return [m.params.copy() for m in self.models]

    def copy(self) -> "LayeredQModels":
        return LayeredQModels([m.copy() for m in self.models])

    def to_dict(self) -> dict:
        return {"d": self.d, "models": [m.to_dict() for m in self.models]}

    @classmethod
    def from_dict(cls, obj: dict) -> "LayeredQModels":
        return cls([QModel.from_dict(m) for m in obj["models"]])

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict()))

    @classmethod
    def load(cls, path) -> "LayeredQModels":
        return cls.from_dict(json.loads(Path(path).read_text()))

    @classmethod
    def from_exact(cls, logq: np.ndarray) -> "LayeredQModels":
        """Tabular models holding an exact log-Q table (one copy per layer)."""
        return cls([TabularQModel.from_table(logq) for _ in range(logq.shape[1])])


@dataclass
class TrainConfig:
    epsilon: float = 0.8
    episodes: int = 3000
    batch_size: int = 64
    lr: float = 1e-3
    lr_final: Optional[float] = 1e-5  # cosine decay from lr to lr_final; None keeps lr fixed
    buffer_capacity: int = 100_000
    updates_per_episode: int = 2
    seed: int = 0
    architecture: str = "mlp"
    hidden: Tuple[int, ...] = (128, 128)
    optimizer: str = "adam"
    clip_norm: float = 10.0
    calibration_rollouts: int = 64
    divergence_threshold: float = 1e6
    divergence_window: int = 50

    def __post_init__(self):
        self.hidden = tuple(self.hidden)
        if not 0.0 <= self.epsilon <= 1.0:
            raise ValueError("epsilon must lie in [0, 1]")
        for name in ("batch_size", "buffer_capacity", "updates_per_episode", "divergence_window"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.episodes < 0 or self.lr <= 0:
            raise ValueError("episodes must be >= 0 and lr > 0")
        if self.architecture not in ("mlp", "tabular"):
            raise ValueError(f"unknown architecture {self.architecture!r}")

    def to_dict(self) -> dict:
        out = asdict(self)
        out["hidden"] = list(self.hidden)
        return out


def epsilon_greedy_pick(dist: TransitionDistribution, epsilon: float, rng: np.random.Generator) -> int:
    """Sample from ``dist`` with probability ``epsilon``, uniformly over feasible actions otherwise."""
    acts = feasible_actions(dist.state, len(dist.probs))
    if len(acts) == 1:
        return acts[0]
    if rng.random() < epsilon:
        p = dist.probs[acts]
        return acts[int(rng.choice(len(acts), p=p / p.sum()))]
    return acts[int(rng.integers(len(acts)))]


def rollout(
    models: LayeredQModels,
    scorer: BICScorer,
    buffer: Optional[ReplayBuffer],
    epsilon: float,
    rng: np.random.Generator,
) -> Ordering:
    """Walk the order graph from the empty state, buffering each transition."""
    s, ordering = 0, []
    for _ in range(models.d):
        a = epsilon_greedy_pick(models.distribution(s), epsilon, rng)
        nxt = s | (1 << a)
        if buffer is not None:
            buffer.add(Transition(s, a, nxt, scorer.action_log_reward(s, a)))
        ordering.append(a)
        s = nxt
    return tuple(ordering)


def target_value(t: Transition, next_model: Optional[QModel], d: int) -> float:
    """Bootstrapped log-Q target of one transition."""
    if t.next_state == full_state(d) or next_model is None:
        return t.log_reward
    q = forward_masked(next_model, t.next_state)
    return t.log_reward + float(logsumexp(q.values[q.feasible]))


def target_values(batch: TransitionBatch, next_model: Optional[QModel], d: int) -> np.ndarray:
    """Vectorised :func:`target_value` for a batch leaving a single layer."""
    if next_model is None:
        return batch.log_rewards.copy()
    values = mask_outputs(next_model.forward(batch.next_states), batch.next_states, d)
    return batch.log_rewards + logsumexp(values, axis=1)


def _calibrate(scorer: BICScorer, n_rollouts: int, rng: np.random.Generator):
    """Per-layer output offset and scale from random orderings' suffix rewards."""
    d = scorer.d
    suffix = np.zeros((n_rollouts, d))
    for r in range(n_rollouts):
        order = rng.permutation(d)
        s, rewards = 0, []
        for a in order:
            rewards.append(scorer.action_log_reward(s, int(a)))
            s |= 1 << int(a)
        suffix[r] = np.cumsum(rewards[::-1])[::-1]
    offsets = suffix.max(axis=0)
    scales = np.maximum(suffix.std(axis=0), 1.0)
    return offsets, scales


def init_models(scorer: BICScorer, config: TrainConfig, rng: Optional[np.random.Generator] = None) -> LayeredQModels:
    d = scorer.d
    if config.architecture == "tabular":
        return LayeredQModels([TabularQModel(d) for _ in range(d)])
    rng = np.random.default_rng([config.seed, 0]) if rng is None else rng
    offsets, scales = _calibrate(scorer, config.calibration_rollouts, rng)
    seeds = rng.integers(2**32, size=d)
    return LayeredQModels(
        [
            MLPQModel(
                d,
                hidden=config.hidden,
                seed=int(seeds[j]),
                optimizer=config.optimizer,
                offset=offsets[j],
                scale=scales[j],
                clip_norm=config.clip_norm,
            )
            for j in range(d)
        ]
    )


def learning_rate(config: TrainConfig, episode: int) -> float:
    if config.lr_final is None or config.episodes <= 1:
        return config.lr
    frac = episode / (config.episodes - 1)
    return config.lr_final + 0.5 * (config.lr - config.lr_final) * (1 + np.cos(np.pi * frac))


def update_layers(
    models: LayeredQModels,
    buffer: ReplayBuffer,
    config: TrainConfig,
    rng: np.random.Generator,
    lr: Optional[float] = None,
) -> List[Optional[float]]:
    """One fitting pass over every layer, deepest first; returns the per-layer losses."""
    d = models.d
    losses = [None] * d
    for j in range(d - 1, -1, -1):
        if len(buffer.layer_indices(j)) == 0:
            continue
        batch = buffer_sample(buffer, j, config.batch_size, rng)
        nxt = models[j + 1] if j + 1 < d else None
        y = target_values(batch, nxt, d)
        losses[j] = models[j].fit_batch(batch.states, batch.actions, y, config.lr if lr is None else lr)
    return losses


def train(
    scorer: BICScorer,
    config: TrainConfig,
    models: Optional[LayeredQModels] = None,
    log_path=None,
    callback=None,
) -> LayeredQModels:
    """Run ``config.episodes`` rollout-then-update episodes.

    ``log_path`` receives one JSON object per episode. ``callback(episode,
    models)`` is invoked after every episode's updates.
    """
    rng = np.random.default_rng([config.seed, 1])
    if models is None:
        models = init_models(scorer, config, np.random.default_rng([config.seed, 0]))
    buffer = ReplayBuffer(config.buffer_capacity)
    window = []
    fh = open(log_path, "w") if log_path is not None else None
    try:
        for episode in range(config.episodes):
            rollout(models, scorer, buffer, config.epsilon, rng)
            lr = learning_rate(config, episode)
            for _ in range(config.updates_per_episode):
                losses = update_layers(models, buffer, config, rng, lr)
            seen = [x for x in losses if x is not None]
            mean_loss = float(np.mean(seen)) if seen else 0.0
            window.append(mean_loss)
            if len(window) > config.divergence_window:
                window.pop(0)
            if len(window) == config.divergence_window and np.mean(window) > config.divergence_threshold:
                raise Diverged(
                    f"running mean loss {np.mean(window):.3g} above {config.divergence_threshold:g} "
                    f"at episode {episode}"
                )
            if fh is not None:
                fh.write(
                    json.dumps(
                        {
                            "episode": episode,
                            "loss": losses,
                            "epsilon": config.epsilon,
                            "lr": lr,
                            "buffer_size": len(buffer),
                        }
                    )
                    + "\n"
                )
            if callback is not None:
                callback(episode, models)
            if episode % 500 == 0:
                log.debug("episode %d mean loss %.4g", episode, mean_loss)
    finally:
        if fh is not None:
            fh.close()
    return models
