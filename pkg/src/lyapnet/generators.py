"""Seeded random networks with controllable width, connectivity and scale.

Also hosts the two structural edits studied alongside them: delay
embedding (recorder neurons carrying the previous state forward) and
magnitude pruning.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from .activations import ActivationKind, identity, parse
from .errors import ConfigError, ShapeError
from .network import PLAIN, UPDATE_FORMS, LayerParams, NetworkSpec

NORMALIZATIONS = ("none", "column_sum1")
INITS = ("gaussian", "orthogonal")
MAX_RESAMPLES = 100


@dataclass(frozen=True)
class GeneratorConfig:
    width_D: int
    depth_N: int
    connectivity_p: float = 1.0
    weight_scale_s: float = 1.0
    normalization: str = "none"
    activation: ActivationKind = field(default_factory=identity)
    update_form: str = PLAIN
    dt: float = 1.0
    seed: int = 0
    init: str = "gaussian"
    delay_embed: bool = False
    prune_fraction: float = 0.0

    def __post_init__(self):
        if isinstance(self.activation, dict):
            object.__setattr__(self, "activation", ActivationKind.from_dict(self.activation))
        elif isinstance(self.activation, str):
            object.__setattr__(self, "activation", parse(self.activation))
        if int(self.width_D) < 1:
            raise ConfigError(f"width_D must be positive, got {self.width_D}")
        if int(self.depth_N) < 2:
            raise ConfigError(f"depth_N counts layer-states and must be >= 2, got {self.depth_N}")
        if not 0 < self.connectivity_p <= 1:
            raise ConfigError(f"connectivity_p must lie in (0, 1], got {self.connectivity_p}")
        if not (self.weight_scale_s >= 0 and math.isfinite(self.weight_scale_s)):
            raise ConfigError(f"weight_scale_s must be a non-negative number, got {self.weight_scale_s}")
        if self.normalization not in NORMALIZATIONS:
            raise ConfigError(f"normalization must be one of {NORMALIZATIONS}, got {self.normalization!r}")
        if self.update_form not in UPDATE_FORMS:
            raise ConfigError(f"update_form must be one of {UPDATE_FORMS}, got {self.update_form!r}")
        if not self.dt >= 0:
            raise ConfigError(f"dt must be non-negative, got {self.dt}")
        if self.init not in INITS:
            raise ConfigError(f"init must be one of {INITS}, got {self.init!r}")
        if self.init == "orthogonal" and (self.connectivity_p != 1 or self.normalization != "none"):
            raise ConfigError("orthogonal init cannot be combined with sparsity or normalization")
        if not 0 <= self.prune_fraction < 1:
            raise ConfigError(f"prune_fraction must lie in [0, 1), got {self.prune_fraction}")
        if self.delay_embed and self.update_form != PLAIN:
            raise ConfigError("delay_embed requires the plain update form")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["activation"] = self.activation.to_dict()
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "GeneratorConfig":
        if not isinstance(d, dict):
            raise ConfigError("generator config must be a JSON object")
        names = {f.name for f in fields(cls)}
        unknown = set(d) - names
        if unknown:
            raise ConfigError(f"unknown generator config fields: {sorted(unknown)}")
        try:
            return cls(**d)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def replace(self, **changes) -> "GeneratorConfig":
        d = asdict(self)
        d["activation"] = self.activation
        d.update(changes)
        return GeneratorConfig(**d)


def _column_sum1(rng, mask, values, p, s):
    """Renormalise coupling strengths so that every column sums to one.

    Entries are first scaled by 1/n (n = nonzeros in the column), then the
    nonzero entries of each column are shifted equally to make the sum
    exactly one. Signs are not forced.
    """
    D = values.shape[0]
    K = np.zeros_like(values)
    for col in range(values.shape[1]):
        m, v = mask[:, col], values[:, col]
        for _ in range(MAX_RESAMPLES):
            if m.any():
                break
            m = rng.random(D) < p
            v = rng.normal(0.0, s, D) if s > 0 else np.zeros(D)
        else:
            raise ConfigError(f"could not draw a nonzero column after {MAX_RESAMPLES} attempts")
        n = int(m.sum())
        c = np.where(m, v / n, 0.0)
        c[m] += (1.0 - c[m].sum()) / n
        K[:, col] = c
    return K


def _orthogonal(rng, D):
    q, r = np.linalg.qr(rng.normal(size=(D, D)))
    return q * np.where(np.diag(r) < 0, -1.0, 1.0)


def generate(cfg: GeneratorConfig) -> NetworkSpec:
    """Draw a network from ``cfg``; identical configs give identical networks.

    Weights are a Bernoulli(p) mask times N(0, s^2) entries, biases N(0, s^2).
    Delay embedding and pruning are applied last when the config asks for them.
    """
    rng = np.random.default_rng(cfg.seed)
    D, s, p = int(cfg.width_D), float(cfg.weight_scale_s), float(cfg.connectivity_p)
    layers = []
    for _ in range(int(cfg.depth_N) - 1):
        if cfg.init == "orthogonal":
            K = s * _orthogonal(rng, D)
        else:
            mask = rng.random((D, D)) < p
            values = rng.normal(0.0, s, (D, D)) if s > 0 else np.zeros((D, D))
            if cfg.normalization == "column_sum1":
                K = _column_sum1(rng, mask, values, p, s)
            else:
                K = np.where(mask, values, 0.0)
        bias = rng.normal(0.0, s, D) if s > 0 else np.zeros(D)
        layers.append(LayerParams(K, bias, cfg.activation))
    net = NetworkSpec(tuple(layers), cfg.update_form, cfg.dt, D)
    if cfg.prune_fraction > 0:
        net = prune(net, cfg.prune_fraction)
    if cfg.delay_embed:
        net = delay_embed(net)
    return net


def delay_embed(net: NetworkSpec, feedback=None) -> NetworkSpec:
    """Widen a constant-width plain network with D recorder neurons.

    The state becomes y (+) x. The y-block follows the original layer map;
    the x-block copies the previous y-block through identity rows and a linear
    activation, so x[j] = y[j-1]. ``feedback`` optionally supplies a D x D
    block (or one per layer) through which x feeds into the y update; by
    default it is zero and the recorders never influence y.
    """
    if net.residual:
        raise ShapeError("delay embedding is defined for the plain update form only")
    D = net.input_dim
    if any(layer.weights.shape != (D, D) for layer in net.layers):
        raise ShapeError("delay embedding needs a constant-width network")
    if feedback is None:
        blocks = [np.zeros((D, D))] * net.n_transitions
    else:
        fb = np.asarray(feedback, dtype=np.float64)
        blocks = list(fb) if fb.ndim == 3 else [fb] * net.n_transitions
    layers = []
    for layer, F in zip(net.layers, blocks):
        K = np.block([[layer.weights, F], [np.eye(D), np.zeros((D, D))]])
        bias = np.concatenate([layer.bias, np.zeros(D)])
        acts = layer.activation if isinstance(layer.activation, tuple) else (layer.activation,) * D
        layers.append(LayerParams(K, bias, tuple(acts) + (identity(),) * D))
    return NetworkSpec(tuple(layers), PLAIN, net.dt, 2 * D)


def embed_input(y0, x0=None) -> np.ndarray:
    """Initial state y0 (+) x0 for a delay-embedded network (x0 defaults to zeros)."""
    y0 = np.asarray(y0, dtype=np.float64)
    x0 = np.zeros_like(y0) if x0 is None else np.asarray(x0, dtype=np.float64)
    return np.concatenate([y0, x0])


def kept_per_row(n: int, fraction: float) -> int:
    # guard against (1 - f) * n landing a hair above an integer
    return int(math.ceil((1.0 - fraction) * n - 1e-9))


def prune_matrix(K, fraction: float) -> np.ndarray:
    K = np.asarray(K, dtype=np.float64)
    n_zero = K.shape[1] - kept_per_row(K.shape[1], fraction)
    out = K.copy()
    if n_zero <= 0:
        return out
    for row in out:
        # stable sort: among equal magnitudes the lower column index goes first
        order = np.argsort(np.abs(row), kind="stable")
        row[order[:n_zero]] = 0.0
    return out


def prune(net: NetworkSpec, fraction: float, seed=None) -> NetworkSpec:
    """Zero the ``fraction`` of smallest-magnitude weights in every row.

    Ties are broken by column index, so ``seed`` has no effect; it is
    accepted to keep the call signature uniform with the other generators.
    """
    if not 0 <= fraction < 1:
        raise ValueError(f"prune fraction must lie in [0, 1), got {fraction}")
    if fraction == 0:
        return net
    layers = tuple(layer.replace(weights=prune_matrix(layer.weights, fraction)) for layer in net.layers)
    return net.replace(layers=layers)


def count_nonzero(net: NetworkSpec) -> list:
    return [int(np.count_nonzero(layer.weights)) for layer in net.layers]


def orthogonal_network(D: int, depth_N: int, seed: int, activation=None) -> NetworkSpec:
    """Plain network of Haar-random orthogonal weights and zero biases."""
    rng = np.random.default_rng(seed)
    act = identity() if activation is None else activation
    layers = tuple(LayerParams(_orthogonal(rng, D), np.zeros(D), act) for _ in range(depth_N - 1))
    return NetworkSpec(layers, PLAIN, 1.0, D)

