"""Parametric approximators of ``log Q(s, .)`` with action masking.

Two interchangeable models are provided. :class:`MLPQModel` is a fully
connected tanh network with hand-written backpropagation; its output is
``offset + scale * net(v)`` where ``offset``/``scale`` are fixed per model so
that the raw network works on unit-sized residuals even though log-values are
BIC sums of magnitude ~``n*d``. :class:`TabularQModel` stores one value per
(state, action) and is used for exactness checks on small graphs.

Both expose the same surface: ``forward``, ``loss_and_grad``, ``fit_batch``,
a flat ``params`` vector, and ``to_dict``/``from_dict`` checkpoints.
"""

import json
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import DimensionMismatch, NoFeasibleAction, NonFiniteGradient
from .exact import TransitionDistribution
from .order_graph import state_matrix

MASK_VALUE = -9e15
CHECKPOINT_FORMAT = "ordergraph-qmodel"
CHECKPOINT_VERSION = 1


class QModel:
    """Common machinery; subclasses implement ``forward`` and ``loss_and_grad``."""

    kind = None
    d: int
    params: np.ndarray

    def forward(self, states) -> np.ndarray:
        raise NotImplementedError

    def loss_and_grad(self, states, actions, targets):
        raise NotImplementedError

    def fit_batch(self, states, actions, targets, lr: float) -> float:
        raise NotImplementedError

    def _inputs(self, states) -> np.ndarray:
        states = np.asarray(states)
        if states.ndim == 2:
            if states.shape[1] != self.d:
                raise DimensionMismatch(f"model expects {self.d} inputs, got {states.shape[1]}")
            return states.astype(float)
        if states.ndim == 0:
            states = states[None]
        if np.any(states >> self.d):
            raise DimensionMismatch(f"state outside the {self.d}-variable order graph")
        return state_matrix(states, self.d)

    def to_dict(self) -> dict:
        return {
            "format": CHECKPOINT_FORMAT,
            "version": CHECKPOINT_VERSION,
            "d": self.d,
            "architecture": self.architecture(),
            "params": self.params.tolist(),
        }

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict()))

    @staticmethod
    def from_dict(obj: dict) -> "QModel":
        if obj.get("format") != CHECKPOINT_FORMAT or obj.get("version") != CHECKPOINT_VERSION:
            raise ValueError("not a version-1 ordergraph Q-model checkpoint")
        arch = obj["architecture"]
        cls = {"mlp": MLPQModel, "tabular": TabularQModel}[arch["kind"]]
        model = cls.from_architecture(obj["d"], arch)
        model.set_params(np.array(obj["params"], dtype=float))
        return model

    @staticmethod
    def load(path) -> "QModel":
        return QModel.from_dict(json.loads(Path(path).read_text()))


class MLPQModel(QModel):
    """Fully connected network ``d -> hidden... -> d`` with tanh hidden layers.

    Parameters
    ----------
    d : int
        Number of variables (input and output width).
    hidden : sequence of int
        Hidden layer widths, default ``(128, 128)``.
    seed : int
        Seed of the uniform ``[-init_range, init_range]`` initialisation;
        output biases start at zero.
    optimizer : {"sgd", "adam"}
        Update rule used by :meth:`fit_batch`.
    offset, scale : float
        Fixed affine map applied to the last linear layer's output.
    clip_norm : float
        Gradient norm above which gradients are rescaled.
    """

    kind = "mlp"

    def __init__(
        self,
        d: int,
        hidden: Sequence[int] = (128, 128),
        seed: int = 0,
        optimizer: str = "sgd",
        offset: float = 0.0,
        scale: float = 1.0,
        clip_norm: float = 10.0,
        init_range: float = 0.1,
    ):
        if optimizer not in ("sgd", "adam"):
            raise ValueError(f"unknown optimizer {optimizer!r}")
        self.d = d
        self.widths = [d, *hidden, d]
        self.optimizer = optimizer
        self.offset = float(offset)
        self.scale = float(scale)
        self.clip_norm = float(clip_norm)
        self.init_range = float(init_range)
        shapes = []
        for fan_in, fan_out in zip(self.widths[:-1], self.widths[1:]):
            shapes += [(fan_in, fan_out), (fan_out,)]
        self._shapes = shapes
        self.params = np.empty(sum(int(np.prod(s)) for s in shapes))
        self._bind_views()
        rng = np.random.default_rng(seed)
        self.params[:] = rng.uniform(-init_range, init_range, size=self.params.size)
        self._layers[-1][1][:] = 0.0
        self._reset_optimizer()

    def _bind_views(self):
        views, pos = [], 0
        for shape in self._shapes:
            size = int(np.prod(shape))
            views.append(self.params[pos:pos + size].reshape(shape))
            pos += size
        self._layers = list(zip(views[0::2], views[1::2]))

    def _reset_optimizer(self):
        self._m = np.zeros_like(self.params)
        self._v = np.zeros_like(self.params)
        self._t = 0

    def set_params(self, params: np.ndarray) -> None:
        if params.shape != self.params.shape:
            raise DimensionMismatch(f"expected {self.params.size} parameters, got {params.size}")
        self.params[:] = params

    def architecture(self) -> dict:
        return {
            "kind": "mlp",
            "widths": self.widths,
            "activation": "tanh",
            "optimizer": self.optimizer,
            "offset": self.offset,
            "scale": self.scale,
            "clip_norm": self.clip_norm,
            "init_range": self.init_range,
        }

    @classmethod
    def from_architecture(cls, d: int, arch: dict) -> "MLPQModel":
        return cls(
            d,
            hidden=arch["widths"][1:-1],
            optimizer=arch["optimizer"],
            offset=arch["offset"],
            scale=arch["scale"],
            clip_norm=arch["clip_norm"],
            init_range=arch.get("init_range", 0.1),
        )

    def copy(self) -> "MLPQModel":
        other = MLPQModel.from_architecture(self.d, self.architecture())
        other.set_params(self.params.copy())
        return other

    def _forward_cache(self, x):
        acts = [x]
        h = x
        last = len(self._layers) - 1
        for i, (w, b) in enumerate(self._layers):
            z = h @ w + b
            h = z if i == last else np.tanh(z)
            acts.append(h)
        return acts

    def forward(self, states) -> np.ndarray:
        out = self._forward_cache(self._inputs(states))[-1]
        return self.offset + self.scale * out

    def loss_and_grad(self, states, actions, targets):
        """Mean squared error on the selected outputs and its gradient w.r.t. ``params``."""
        x = self._inputs(states)
        actions = np.asarray(actions, dtype=np.int64)
        targets = np.asarray(targets, dtype=float)
        m = len(targets)
        acts = self._forward_cache(x)
        rows = np.arange(m)
        pred = self.offset + self.scale * acts[-1][rows, actions]
        resid = targets - pred
        loss = float(resid @ resid / m)
        delta = np.zeros_like(acts[-1])
        delta[rows, actions] = -2.0 / m * resid * self.scale
        grads = []
        for i in range(len(self._layers) - 1, -1, -1):
            w, _ = self._layers[i]
            grads.append((acts[i].T @ delta, delta.sum(axis=0)))
            if i:
                delta = (delta @ w.T) * (1.0 - acts[i] ** 2)
        flat = np.concatenate([g.ravel() for pair in reversed(grads) for g in pair])
        return loss, flat

    def fit_batch(self, states, actions, targets, lr: float) -> float:
        """One optimizer step on the batch MSE; returns the pre-step loss."""
        loss, grad = self.loss_and_grad(states, actions, targets)
        if not np.all(np.isfinite(grad)):
            raise NonFiniteGradient("non-finite gradient; reduce the learning rate")
        norm = float(np.linalg.norm(grad))
        if norm > self.clip_norm:
            grad *= self.clip_norm / norm
        if self.optimizer == "sgd":
            self.params -= lr * grad
        else:
            self._t += 1
            self._m = 0.9 * self._m + 0.1 * grad
            self._v = 0.999 * self._v + 0.001 * grad ** 2
            m_hat = self._m / (1 - 0.9 ** self._t)
            v_hat = self._v / (1 - 0.999 ** self._t)
            self.params -= lr * m_hat / (np.sqrt(v_hat) + 1e-8)
        return loss


class TabularQModel(QModel):
    """One stored value per (state, action); ``params`` is the flattened table.

    :meth:`fit_batch` takes the exact minimiser step of the per-entry
    quadratic, so ``lr=1`` moves every touched entry to the mean of its
    targets in the batch.
    """

    kind = "tabular"

    def __init__(self, d: int, init_value: float = 0.0):
        self.d = d
        self.init_value = float(init_value)
        self.params = np.full((1 << d) * d, self.init_value)
        self.table = self.params.reshape(1 << d, d)

    def architecture(self) -> dict:
        return {"kind": "tabular", "init_value": self.init_value}

    @classmethod
    def from_architecture(cls, d: int, arch: dict) -> "TabularQModel":
        return cls(d, arch.get("init_value", 0.0))

    @classmethod
    def from_table(cls, logq: np.ndarray) -> "TabularQModel":
        model = cls(logq.shape[1])
        model.table[:] = np.where(np.isfinite(logq), logq, 0.0)
        return model

    def set_params(self, params: np.ndarray) -> None:
        if params.shape != self.params.shape:
            raise DimensionMismatch(f"expected {self.params.size} parameters, got {params.size}")
        self.params[:] = params

    def copy(self) -> "TabularQModel":
        other = TabularQModel(self.d, self.init_value)
        other.set_params(self.params.copy())
        return other

    def _state_index(self, states) -> np.ndarray:
        states = np.asarray(states)
        if states.ndim == 2:
            if states.shape[1] != self.d:
                raise DimensionMismatch(f"model expects {self.d} inputs, got {states.shape[1]}")
            return (states.astype(np.int64) << np.arange(self.d)).sum(axis=1)
        states = np.atleast_1d(states).astype(np.int64)
        if np.any(states >> self.d):
            raise DimensionMismatch(f"state outside the {self.d}-variable order graph")
        return states

    def forward(self, states) -> np.ndarray:
        return self.table[self._state_index(states)].copy()

    def loss_and_grad(self, states, actions, targets):
        idx = self._state_index(states)
        actions = np.asarray(actions, dtype=np.int64)
        targets = np.asarray(targets, dtype=float)
        m = len(targets)
        resid = targets - self.table[idx, actions]
        grad = np.zeros_like(self.params)
        np.add.at(grad, idx * self.d + actions, -2.0 / m * resid)
        return float(resid @ resid / m), grad

    def fit_batch(self, states, actions, targets, lr: float) -> float:
        idx = self._state_index(states)
        actions = np.asarray(actions, dtype=np.int64)
        targets = np.asarray(targets, dtype=float)
        flat = idx * self.d + actions
        resid = targets - self.params[flat]
        loss = float(resid @ resid / len(targets))
        if not np.all(np.isfinite(resid)):
            raise NonFiniteGradient("non-finite residual in tabular update")
        keys, inverse, counts = np.unique(flat, return_inverse=True, return_counts=True)
        step = np.zeros(len(keys))
        np.add.at(step, inverse, resid)
        self.params[keys] += lr * step / counts
        return loss


class MaskedQVector:
    """Model outputs with infeasible actions set to exactly ``MASK_VALUE``."""

    def __init__(self, values: np.ndarray, state: int):
        self.values = values
        self.state = state

    @property
    def feasible(self) -> np.ndarray:
        return self.values != MASK_VALUE

    def __repr__(self):
        return f"MaskedQVector({self.values!r}, state={self.state:#b})"


def forward_masked(model: QModel, state: int) -> MaskedQVector:
    values = model.forward(state)[0]
    infeasible = (state >> np.arange(model.d)) & 1 == 1
    values[infeasible] = MASK_VALUE
    return MaskedQVector(values, state)


def mask_outputs(values: np.ndarray, states: np.ndarray, d: int) -> np.ndarray:
    """Batch version of the mask: rows are states, infeasible entries set to ``MASK_VALUE``."""
    infeasible = (np.asarray(states, dtype=np.int64)[:, None] >> np.arange(d)) & 1 == 1
    return np.where(infeasible, MASK_VALUE, values)


def transition_distribution(q: MaskedQVector) -> TransitionDistribution:
    """Softmax with max-subtraction; masked entries underflow to probability 0."""
    values = q.values
    if not np.any(values != MASK_VALUE):
        raise NoFeasibleAction("every action is masked")
    z = np.exp(values - values.max())
    return TransitionDistribution(q.state, z / z.sum())
