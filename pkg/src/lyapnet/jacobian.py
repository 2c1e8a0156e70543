"""Local Jacobians along a trajectory and their finite-difference oracle."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ShapeError
from .network import NetworkSpec, Trajectory, _as_state, _check_index, forward, preactivation


@dataclass(frozen=True, eq=False)
class JacobianChain:
    """Ordered local Jacobians; ``factors[q]`` maps layer q to layer q+1."""

    factors: tuple
    trajectory_ref: object = None

    def __post_init__(self):
        factors = []
        for f in self.factors:
            arr = np.array(f, dtype=np.float64)
            if arr.ndim != 2:
                raise ShapeError(f"Jacobian factors must be matrices, got shape {arr.shape}")
            arr.setflags(write=False)
            factors.append(arr)
        for q in range(1, len(factors)):
            if factors[q].shape[1] != factors[q - 1].shape[0]:
                raise ShapeError(
                    f"factor {q} has shape {factors[q].shape}, cannot follow factor {q - 1} of shape {factors[q - 1].shape}",
                    q,
                )
        object.__setattr__(self, "factors", tuple(factors))

    def __len__(self):
        return len(self.factors)

    @property
    def depth(self) -> int:
        return len(self.factors)

    @property
    def shape(self) -> tuple:
        """Shape of the full product, (D_j, D_0)."""
        return (self.factors[-1].shape[0], self.factors[0].shape[1])


def local_jacobian(net: NetworkSpec, q: int, y) -> np.ndarray:
    """Derivative of transition ``q`` with respect to the state, at ``y``."""
    _check_index(net, q)
    y = _as_state(net, q, y)
    layer = net.layers[q]
    jac = layer.act_deriv(preactivation(net, q, y))[:, None] * layer.weights
    if net.residual:
        jac = np.eye(layer.d_out) + net.dt * jac
    return jac


def chain(net: NetworkSpec, traj: Trajectory, j: int | None = None) -> JacobianChain:
    """Local Jacobians of the first ``j`` transitions along ``traj``."""
    j = traj.n_transitions if j is None else j
    if not 1 <= j <= traj.n_transitions:
        raise IndexError(f"depth {j} out of range 1..{traj.n_transitions}")
    return JacobianChain(tuple(local_jacobian(net, q, traj.states[q]) for q in range(j)), traj.input_id)


def finite_difference_sensitivity(net: NetworkSpec, y0, j: int, h: float = 1e-5) -> np.ndarray:
    """Central-difference estimate of d y[j] / d y[0], one column per input coordinate."""
    if h <= 0:
        raise ValueError("step size must be positive")
    if not 1 <= j <= net.n_transitions:
        raise IndexError(f"depth {j} out of range 1..{net.n_transitions}")
    y0 = np.asarray(y0, dtype=np.float64)
    cols = []
    for beta in range(y0.shape[0]):
        e = np.zeros_like(y0)
        e[beta] = h
        plus = forward(net, y0 + e, depth=j).final
        minus = forward(net, y0 - e, depth=j).final
        cols.append((plus - minus) / (2 * h))
    return np.column_stack(cols)


def min_preactivation_margin(net: NetworkSpec, traj: Trajectory, j: int | None = None) -> float:
    """Smallest |preactivation| met along the first ``j`` transitions.

    Used to keep gradient checks away from ReLU kinks.
    """
    j = traj.n_transitions if j is None else j
    return min(float(np.min(np.abs(preactivation(net, q, traj.states[q])))) for q in range(j))
