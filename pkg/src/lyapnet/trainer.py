"""Minimal minibatch SGD on mean-squared error.

Its only job is to turn generated networks into trained ones for the
regularisation study, so it stays small: one loss, hand-written backprop,
optional L2 weight decay on the weights (not the biases).
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields

import numpy as np

from .errors import ConfigError, ShapeError, TrainingDivergedError
from .network import NetworkSpec

DATA_KINDS = ("noisy_sine", "two_clusters", "linear")


@dataclass(frozen=True, eq=False)
class Dataset:
    inputs: np.ndarray
    targets: np.ndarray
    name: str = ""

    def __post_init__(self):
        x = np.atleast_2d(np.array(self.inputs, dtype=np.float64))
        t = np.atleast_2d(np.array(self.targets, dtype=np.float64))
        if x.shape[0] != t.shape[0]:
            raise ShapeError(f"{x.shape[0]} inputs but {t.shape[0]} targets")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(t))):
            raise ValueError("dataset entries must be finite")
        x.setflags(write=False)
        t.setflags(write=False)
        object.__setattr__(self, "inputs", x)
        object.__setattr__(self, "targets", t)

    def __len__(self):
        return self.inputs.shape[0]

    def lift(self, width: int) -> "Dataset":
        """Zero-pad inputs and targets to ``width`` coordinates.

        Constant-width networks read the task off their first coordinates;
        the padded targets ask the remaining outputs to stay at zero.
        """
        def pad(a):
            if a.shape[1] > width:
                raise ShapeError(f"cannot lift {a.shape[1]} coordinates to width {width}")
            return np.pad(a, ((0, 0), (0, width - a.shape[1])))

        return Dataset(pad(self.inputs), pad(self.targets), self.name)


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 200
    learning_rate: float = 0.01
    batch_size: int = 10
    weight_decay: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if int(self.epochs) < 0:
            raise ConfigError(f"epochs must be non-negative, got {self.epochs}")
        if not (self.learning_rate >= 0 and math.isfinite(self.learning_rate)):
            raise ConfigError(f"learning_rate must be a non-negative number, got {self.learning_rate}")
        if int(self.batch_size) < 1:
            raise ConfigError(f"batch_size must be at least 1, got {self.batch_size}")
        if not self.weight_decay >= 0:
            raise ConfigError(f"weight_decay must be non-negative, got {self.weight_decay}")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        if not isinstance(d, dict):
            raise ConfigError("train config must be a JSON object")
        unknown = set(d) - {f.name for f in fields(cls)}
        if unknown:
            raise ConfigError(f"unknown train config fields: {sorted(unknown)}")
        try:
            return cls(**d)
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc

    def replace(self, **changes) -> "TrainConfig":
        d = asdict(self)
        d.update(changes)
        return TrainConfig(**d)


def make_dataset(kind: str, n: int, noise: float = 0.0, seed: int = 0, **options) -> Dataset:
    """Synthetic tasks.

    ``noisy_sine``: x ~ U[-pi, pi], target sin(x) + N(0, noise^2).
    ``two_clusters``: 2-D Gaussian blobs centred at (+-separation/2, 0) with
    standard deviation ``spread``; one-hot targets.
    ``linear``: x ~ N(0, I) in ``dim`` dimensions, target A x + b + noise with
    a seeded random affine map.
    """
    if n < 1:
        raise ValueError("dataset needs at least one sample")
    if noise < 0:
        raise ValueError("noise must be non-negative")
    rng = np.random.default_rng(seed)
    if kind == "noisy_sine":
        x = rng.uniform(-np.pi, np.pi, (n, 1))
        t = np.sin(x) + (rng.normal(0.0, noise, (n, 1)) if noise > 0 else 0.0)
    elif kind == "two_clusters":
        separation = options.get("separation", 4.0)
        spread = options.get("spread", 0.5)
        labels = rng.integers(0, 2, n)
        centres = np.where(labels[:, None] == 1, separation / 2, -separation / 2) * np.array([1.0, 0.0])
        x = centres + rng.normal(0.0, spread, (n, 2))
        t = np.eye(2)[labels]
        if noise > 0:
            t = t + rng.normal(0.0, noise, t.shape)
    elif kind == "linear":
        dim = int(options.get("dim", 4))
        A = rng.normal(0.0, 1.0 / np.sqrt(dim), (dim, dim))
        b = rng.normal(0.0, 0.1, dim)
        x = rng.normal(size=(n, dim))
        t = x @ A.T + b
        if noise > 0:
            t = t + rng.normal(0.0, noise, t.shape)
    else:
        raise ValueError(f"unknown dataset kind {kind!r}; expected one of {DATA_KINDS}")
    return Dataset(x, t, kind)


def _params(net):
    return [np.array(layer.weights) for layer in net.layers], [np.array(layer.bias) for layer in net.layers]


def _rebuild(net, Ks, bs):
    layers = tuple(layer.replace(weights=K, bias=b) for layer, K, b in zip(net.layers, Ks, bs))
    return net.replace(layers=layers)


def _batch_forward(net, Ks, bs, X):
    ys, zs = [X], []
    y = X
    for layer, K, b in zip(net.layers, Ks, bs):
        z = y @ K.T + b
        out = layer.act(z)
        y = y + net.dt * out if net.residual else out
        zs.append(z)
        ys.append(y)
    return ys, zs


def mse(net: NetworkSpec, data: Dataset) -> float:
    Ks, bs = _params(net)
    with np.errstate(over="ignore", invalid="ignore"):
        ys, _ = _batch_forward(net, Ks, bs, data.inputs)
        return float(np.mean((ys[-1] - data.targets) ** 2))


def _gradients(net, Ks, bs, X, T, weight_decay):
    ys, zs = _batch_forward(net, Ks, bs, X)
    resid = ys[-1] - T
    loss = float(np.mean(resid**2))
    g = 2.0 * resid / resid.size
    dKs, dbs = [None] * len(Ks), [None] * len(Ks)
    for q in reversed(range(len(Ks))):
        dz = g * net.layers[q].act_deriv(zs[q])
        if net.residual:
            dz = net.dt * dz
        dKs[q] = dz.T @ ys[q] + weight_decay * Ks[q]
        dbs[q] = dz.sum(axis=0)
        g = dz @ Ks[q] + (g if net.residual else 0.0)
    return loss, dKs, dbs


def loss_and_gradients(net: NetworkSpec, data: Dataset, weight_decay: float = 0.0):
    """Objective and its gradients with respect to every weight and bias.

    The objective is the MSE plus ``weight_decay / 2`` times the squared
    Frobenius norms of the weight matrices; the returned loss is the MSE part.
    """
    _check_dims(net, data)
    Ks, bs = _params(net)
    return _gradients(net, Ks, bs, data.inputs, data.targets, weight_decay)


def _check_dims(net, data):
    if data.inputs.shape[1] != net.input_dim:
        raise ShapeError(f"network takes {net.input_dim} inputs, dataset has {data.inputs.shape[1]}")
    if data.targets.shape[1] != net.widths[-1]:
        raise ShapeError(f"network emits {net.widths[-1]} outputs, dataset targets have {data.targets.shape[1]}")


def train(net: NetworkSpec, data: Dataset, cfg: TrainConfig):
    """Run SGD; returns the trained network and the per-epoch training MSE.

    ``loss_history[0]`` is the loss before training and ``loss_history[e]``
    the loss after epoch ``e``.

    Raises
    ------
    TrainingDivergedError
        When the loss or any parameter stops being finite; carries the epoch.
    """
    _check_dims(net, data)
    Ks, bs = _params(net)
    rng = np.random.default_rng(cfg.seed)
    X, T = data.inputs, data.targets
    n = X.shape[0]
    lr, wd = float(cfg.learning_rate), float(cfg.weight_decay)
    history = [mse(net, data)]
    if not math.isfinite(history[0]):
        raise TrainingDivergedError("initial loss is not finite", epoch=0)
    with np.errstate(over="ignore", invalid="ignore"):
        for epoch in range(1, int(cfg.epochs) + 1):
            order = rng.permutation(n)
            for start in range(0, n, int(cfg.batch_size)):
                idx = order[start : start + int(cfg.batch_size)]
                _, dKs, dbs = _gradients(net, Ks, bs, X[idx], T[idx], wd)
                for q in range(len(Ks)):
                    Ks[q] = Ks[q] - lr * dKs[q]
                    bs[q] = bs[q] - lr * dbs[q]
                if not all(np.all(np.isfinite(K)) and np.all(np.isfinite(b)) for K, b in zip(Ks, bs)):
                    raise TrainingDivergedError(f"parameters became non-finite during epoch {epoch}", epoch=epoch)
            ys, _ = _batch_forward(net, Ks, bs, X)
            loss = float(np.mean((ys[-1] - T) ** 2))
            if not math.isfinite(loss):
                raise TrainingDivergedError(f"loss became non-finite at epoch {epoch}", epoch=epoch)
            history.append(loss)
    return _rebuild(net, Ks, bs), history


def weight_norms(net: NetworkSpec) -> float:
    return float(np.sqrt(sum(np.sum(layer.weights**2) for layer in net.layers)))

