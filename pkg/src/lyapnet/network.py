"""Feedforward networks viewed as discrete-time dynamical systems.

A network with N layer-states has N-1 transitions. Transition q maps the
state y[q] to y[q+1] either directly (plain form)::

    y[q+1] = act(K[q] @ y[q] + bias[q])

or as an explicit Euler step (residual form)::

    y[q+1] = y[q] + act(K[q] @ y[q] + bias[q]) * dt
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .activations import ActivationKind, activate, activate_deriv
from .errors import ConfigError, NumericalError, ShapeError

PLAIN = "plain"
RESIDUAL = "residual"
UPDATE_FORMS = (PLAIN, RESIDUAL)


def _frozen(a, ndim, name):
    arr = np.array(a, dtype=np.float64)
    if arr.ndim != ndim:
        raise ShapeError(f"{name} must be {ndim}-dimensional, got shape {arr.shape}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class LayerParams:
    """Weights, bias and activation of one transition.

    ``activation`` is either a single kind applied to every output neuron or
    a tuple with one kind per output neuron (used by delay embeddings, where
    recorder neurons are linear).
    """

    weights: np.ndarray
    bias: np.ndarray
    activation: ActivationKind | tuple = field(default_factory=lambda: ActivationKind("identity"))

    def __post_init__(self):
        w = _frozen(self.weights, 2, "weights")
        b = _frozen(self.bias, 1, "bias")
        if w.shape[0] != b.shape[0]:
            raise ShapeError(f"weights have {w.shape[0]} rows but bias has length {b.shape[0]}")
        if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
            raise ValueError("layer parameters must be finite")
        act = self.activation
        if not isinstance(act, ActivationKind):
            act = tuple(act)
            if len(act) != w.shape[0]:
                raise ShapeError(f"{len(act)} per-neuron activations for {w.shape[0]} neurons")
            if not all(isinstance(a, ActivationKind) for a in act):
                raise TypeError("per-neuron activations must be ActivationKind values")
            if len(set(act)) == 1:
                act = act[0]
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "bias", b)
        object.__setattr__(self, "activation", act)

    @property
    def d_in(self) -> int:
        return self.weights.shape[1]

    @property
    def d_out(self) -> int:
        return self.weights.shape[0]

    def _groups(self):
        acts = self.activation
        for kind in dict.fromkeys(acts):
            yield kind, np.array([a == kind for a in acts])

    def act(self, z):
        if isinstance(self.activation, ActivationKind):
            return activate(self.activation, z)
        out = np.empty_like(z)
        for kind, idx in self._groups():
            out[..., idx] = activate(kind, z[..., idx])
        return out

    def act_deriv(self, z):
        if isinstance(self.activation, ActivationKind):
            return activate_deriv(self.activation, z)
        out = np.empty_like(z)
        for kind, idx in self._groups():
            out[..., idx] = activate_deriv(kind, z[..., idx])
        return out

    def __eq__(self, other):
        if not isinstance(other, LayerParams):
            return NotImplemented
        return (
            np.array_equal(self.weights, other.weights)
            and np.array_equal(self.bias, other.bias)
            and self.activation == other.activation
        )

    def replace(self, **changes) -> "LayerParams":
        kw = dict(weights=self.weights, bias=self.bias, activation=self.activation)
        kw.update(changes)
        return LayerParams(**kw)


@dataclass(frozen=True, eq=False)
class NetworkSpec:
    layers: tuple
    update_form: str = PLAIN
    dt: float = 1.0
    input_dim: int | None = None

    def __post_init__(self):
        layers = tuple(self.layers)
        if not layers:
            raise ShapeError("a network needs at least one transition")
        if self.update_form not in UPDATE_FORMS:
            raise ValueError(f"update_form must be one of {UPDATE_FORMS}, got {self.update_form!r}")
        dt = float(self.dt)
        if not np.isfinite(dt) or dt < 0:
            raise ValueError(f"dt must be a non-negative finite number, got {self.dt}")
        input_dim = layers[0].d_in if self.input_dim is None else int(self.input_dim)
        if layers[0].d_in != input_dim:
            raise ShapeError(f"layer 0 expects {layers[0].d_in} inputs but input_dim is {input_dim}", 0)
        for q in range(1, len(layers)):
            if layers[q].d_in != layers[q - 1].d_out:
                raise ShapeError(
                    f"layer {q} expects {layers[q].d_in} inputs but layer {q - 1} emits {layers[q - 1].d_out}", q
                )
        if self.update_form == RESIDUAL:
            for q, layer in enumerate(layers):
                if layer.d_in != layer.d_out:
                    raise ShapeError(f"residual form needs square weights; layer {q} is {layer.weights.shape}", q)
        object.__setattr__(self, "layers", layers)
        object.__setattr__(self, "dt", dt)
        object.__setattr__(self, "input_dim", input_dim)

    @property
    def n_transitions(self) -> int:
        return len(self.layers)

    @property
    def widths(self) -> list:
        return [self.input_dim] + [layer.d_out for layer in self.layers]

    @property
    def residual(self) -> bool:
        return self.update_form == RESIDUAL

    def __eq__(self, other):
        if not isinstance(other, NetworkSpec):
            return NotImplemented
        return (
            self.update_form == other.update_form
            and self.dt == other.dt
            and self.input_dim == other.input_dim
            and len(self.layers) == len(other.layers)
            and all(a == b for a, b in zip(self.layers, other.layers))
        )

    def replace(self, **changes) -> "NetworkSpec":
        kw = dict(layers=self.layers, update_form=self.update_form, dt=self.dt, input_dim=self.input_dim)
        kw.update(changes)
        return NetworkSpec(**kw)

    def truncated(self, j: int) -> "NetworkSpec":
        """The first ``j`` transitions as a network of their own."""
        return self.replace(layers=self.layers[:j])


@dataclass(frozen=True, eq=False)
class Trajectory:
    """States y[0..j_end] visited by one input."""

    states: tuple
    input_id: object = None

    def __post_init__(self):
        states = []
        for s in self.states:
            arr = np.array(s, dtype=np.float64)
            arr.setflags(write=False)
            states.append(arr)
        object.__setattr__(self, "states", tuple(states))

    @property
    def n_transitions(self) -> int:
        return len(self.states) - 1

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]

    def __len__(self):
        return len(self.states)

    def __eq__(self, other):
        if not isinstance(other, Trajectory):
            return NotImplemented
        return len(self.states) == len(other.states) and all(
            np.array_equal(a, b) for a, b in zip(self.states, other.states)
        )


def _check_index(net: NetworkSpec, q: int):
    if not 0 <= q < net.n_transitions:
        raise IndexError(f"layer index {q} out of range for a network with {net.n_transitions} transitions")


def _as_state(net: NetworkSpec, q: int, y) -> np.ndarray:
    y = np.asarray(y, dtype=np.float64)
    d_in = net.layers[q].d_in
    if y.shape != (d_in,):
        raise ShapeError(f"layer {q} expects a state of length {d_in}, got shape {y.shape}", q)
    return y


def preactivation(net: NetworkSpec, q: int, y) -> np.ndarray:
    layer = net.layers[q]
    return layer.weights @ y + layer.bias


def step(net: NetworkSpec, q: int, y) -> np.ndarray:
    """Apply transition ``q`` to the state ``y``."""
    _check_index(net, q)
    y = _as_state(net, q, y)
    out = net.layers[q].act(preactivation(net, q, y))
    if net.residual:
        out = y + out * net.dt
    return out


def forward(net: NetworkSpec, y0, input_id=None, depth: int | None = None) -> Trajectory:
    """Propagate ``y0`` through the first ``depth`` transitions (all by default).

    Raises
    ------
    NumericalError
        If a state stops being finite; ``err.layer`` is the offending transition.
    """
    y = np.asarray(y0, dtype=np.float64)
    if y.shape != (net.input_dim,):
        raise ShapeError(f"input must have length {net.input_dim}, got shape {y.shape}", 0)
    if not np.all(np.isfinite(y)):
        raise NumericalError("input contains non-finite entries", layer=None)
    depth = net.n_transitions if depth is None else depth
    states = [y]
    with np.errstate(over="ignore", invalid="ignore"):
        for q in range(depth):
            y = step(net, q, y)
            if not np.all(np.isfinite(y)):
                raise NumericalError(f"state became non-finite at layer {q} (exploding configuration)", layer=q)
            states.append(y)
    return Trajectory(tuple(states), input_id)


# -- JSON network files ------------------------------------------------------

_TOP_FIELDS = {"update_form", "dt", "input_dim", "layers"}
_LAYER_FIELDS = {"weights", "bias", "activation"}


def to_dict(net: NetworkSpec) -> dict:
    layers = []
    for layer in net.layers:
        act = layer.activation
        act_json = act.to_dict() if isinstance(act, ActivationKind) else [a.to_dict() for a in act]
        layers.append(
            {"weights": layer.weights.tolist(), "bias": layer.bias.tolist(), "activation": act_json}
        )
    return {"update_form": net.update_form, "dt": net.dt, "input_dim": net.input_dim, "layers": layers}


def from_dict(d: dict) -> NetworkSpec:
    """Build a network from its JSON document, rejecting unknown fields."""
    if not isinstance(d, dict):
        raise ConfigError("network document must be a JSON object")
    unknown = set(d) - _TOP_FIELDS
    if unknown:
        raise ConfigError(f"unknown network fields: {sorted(unknown)}")
    missing = {"update_form", "input_dim", "layers"} - set(d)
    if missing:
        raise ConfigError(f"missing network fields: {sorted(missing)}")
    if not isinstance(d["layers"], list):
        raise ConfigError("'layers' must be a list")
    layers = []
    for q, ld in enumerate(d["layers"]):
        if not isinstance(ld, dict):
            raise ConfigError(f"layers[{q}] must be an object")
        unknown = set(ld) - _LAYER_FIELDS
        if unknown:
            raise ConfigError(f"layers[{q}]: unknown fields {sorted(unknown)}")
        missing = _LAYER_FIELDS - set(ld)
        if missing:
            raise ConfigError(f"layers[{q}]: missing fields {sorted(missing)}")
        try:
            act = ld["activation"]
            if isinstance(act, list):
                act = tuple(ActivationKind.from_dict(a) for a in act)
            else:
                act = ActivationKind.from_dict(act)
            layers.append(LayerParams(ld["weights"], ld["bias"], act))
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"layers[{q}]: {exc}") from exc
    try:
        return NetworkSpec(tuple(layers), d["update_form"], d.get("dt", 1.0), d["input_dim"])
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from exc


def dumps(net: NetworkSpec) -> str:
    return json.dumps(to_dict(net), indent=1) + "\n"


def loads(text: str) -> NetworkSpec:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    return from_dict(doc)


def load(path) -> NetworkSpec:
    with open(path) as fh:
        return loads(fh.read())


def build(weights: Sequence, biases=None, activation=None, update_form=PLAIN, dt=1.0) -> NetworkSpec:
    """Convenience constructor from lists of weight matrices."""
    weights = [np.asarray(w, dtype=np.float64) for w in weights]
    if biases is None:
        biases = [np.zeros(w.shape[0]) for w in weights]
    if activation is None:
        activation = ActivationKind("identity")
    # a list gives one activation per layer; anything else is shared
    acts = activation if isinstance(activation, list) else [activation] * len(weights)
    layers = tuple(LayerParams(w, b, a) for w, b, a in zip(weights, biases, acts))
    return NetworkSpec(layers, update_form, dt)
