"""Pointwise activation functions and their derivatives.

Every activation is a frozen ``ActivationKind`` value. Both the map and the
derivative are total over the reals and vectorise over numpy arrays.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit

KINDS = ("identity", "sigmoid", "tanh", "steep_step", "relu", "elu", "swish")

# kinds carrying a strictly positive shape parameter, with its default
_PARAM_DEFAULTS = {
    "sigmoid": 1.0,
    "tanh": 1.0,
    "steep_step": 50.0,
    "elu": 1.0,
    "swish": 1.0,
}

SMOOTH_KINDS = ("identity", "sigmoid", "tanh", "steep_step", "elu", "swish")


@dataclass(frozen=True)
class ActivationKind:
    """An activation variant plus its shape parameter.

    ``param`` is the steepness for sigmoid/tanh/steep_step, ``alpha`` for ELU
    and ``beta`` for swish. It is ignored (and stored as ``None``) for the
    parameter-free identity and ReLU.
    """

    kind: str
    param: float | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown activation kind {self.kind!r}; expected one of {KINDS}")
        if self.kind in _PARAM_DEFAULTS:
            param = _PARAM_DEFAULTS[self.kind] if self.param is None else float(self.param)
            if not np.isfinite(param) or param <= 0:
                raise ValueError(f"{self.kind} parameter must be positive, got {param}")
            object.__setattr__(self, "param", param)
        else:
            object.__setattr__(self, "param", None)

    @property
    def smooth(self) -> bool:
        return self.kind in SMOOTH_KINDS

    def __str__(self):
        return self.kind if self.param is None else f"{self.kind}({self.param:g})"

    def to_dict(self) -> dict:
        d = {"kind": self.kind}
        if self.param is not None:
            d["param"] = self.param
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ActivationKind":
        if not isinstance(d, dict):
            raise ValueError(f"activation must be an object, got {type(d).__name__}")
        unknown = set(d) - {"kind", "param"}
        if unknown:
            raise ValueError(f"unknown activation fields: {sorted(unknown)}")
        if "kind" not in d:
            raise ValueError("activation is missing 'kind'")
        return cls(d["kind"], d.get("param"))


def identity() -> ActivationKind:
    return ActivationKind("identity")


def sigmoid(steepness: float = 1.0) -> ActivationKind:
    return ActivationKind("sigmoid", steepness)


def tanh(steepness: float = 1.0) -> ActivationKind:
    return ActivationKind("tanh", steepness)


def steep_step(steepness: float = 50.0) -> ActivationKind:
    """Binary step smoothed into a sigmoid with a tunable slope at the origin."""
    return ActivationKind("steep_step", steepness)


def relu() -> ActivationKind:
    return ActivationKind("relu")


def elu(alpha: float = 1.0) -> ActivationKind:
    return ActivationKind("elu", alpha)


def swish(beta: float = 1.0) -> ActivationKind:
    return ActivationKind("swish", beta)


def activate(kind: ActivationKind, x):
    """Apply the activation elementwise. Scalars in, scalars out."""
    x = np.asarray(x, dtype=np.float64)
    k, a = kind.kind, kind.param
    if k == "identity":
        out = x.copy()
    elif k in ("sigmoid", "steep_step"):
        out = expit(a * x)
    elif k == "tanh":
        out = np.tanh(a * x)
    elif k == "relu":
        out = np.where(x > 0, x, 0.0)
    elif k == "elu":
        out = np.where(x > 0, x, a * np.expm1(np.minimum(x, 0.0)))
    else:  # swish
        out = x * expit(a * x)
    return out[()] if out.ndim == 0 else out


def activate_deriv(kind: ActivationKind, x):
    """Elementwise derivative of the activation; ReLU'(0) is 0."""
    x = np.asarray(x, dtype=np.float64)
    k, a = kind.kind, kind.param
    if k == "identity":
        out = np.ones_like(x)
    elif k in ("sigmoid", "steep_step"):
        s = expit(a * x)
        out = a * s * (1.0 - s)
    elif k == "tanh":
        out = a * (1.0 - np.tanh(a * x) ** 2)
    elif k == "relu":
        out = np.where(x > 0, 1.0, 0.0)
    elif k == "elu":
        out = np.where(x > 0, 1.0, a * np.exp(np.minimum(x, 0.0)))
    else:
        s = expit(a * x)
        out = s + a * x * s * (1.0 - s)
    return out[()] if out.ndim == 0 else out


def parse(text: str) -> ActivationKind:
    """Parse ``"tanh"`` or ``"tanh:2.5"`` style shorthands."""
    name, _, param = text.partition(":")
    return ActivationKind(name.strip(), float(param) if param else None)
