"""Finite-time Lyapunov spectroscopy of feedforward networks."""

__version__ = "0.1.0"

from .activations import ActivationKind, activate, activate_deriv  # noqa: E402
from .errors import ConfigError, LyapnetError, NumericalError, ShapeError, TrainingDivergedError  # noqa: E402
from .jacobian import JacobianChain, chain, finite_difference_sensitivity, local_jacobian  # noqa: E402
from .network import LayerParams, NetworkSpec, Trajectory, forward, step  # noqa: E402
from .spectral import (  # noqa: E402
    DynamicsReport,
    FtleSpectrum,
    analyze,
    classify,
    explicit_sensitivity,
    ftle,
    product_singular_values_stable,
    singular_values,
)
