"""Finite-time Lyapunov spectra of the input-to-layer sensitivity matrix.

The sensitivity matrix at depth j is the product of the local Jacobians of
the first j transitions. Its singular values mu_k give the exponents

    lambda_k = ln(mu_k) / j

which are per-layer divergence rates. Two routes compute them: the naive one
multiplies the Jacobians out and takes an SVD; the stable one
(``product_singular_values_stable``) never forms the product and works in
the log domain throughout.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import productsvd
from ._io import fmt_float
from .errors import NumericalError
from .jacobian import JacobianChain, chain
from .network import NetworkSpec, Trajectory, forward

REGULAR = "Regular"
CHAOTIC = "Chaotic"
HYPERCHAOTIC = "Hyperchaotic"


@dataclass(frozen=True, eq=False)
class FtleSpectrum:
    """Log singular values and exponents at one depth, in descending order.

    Zero singular values are carried as ``-inf`` in both arrays.
    """

    depth_j: int
    log_mu: np.ndarray
    exponents: np.ndarray
    input_id: object = None

    @property
    def singular_values(self) -> np.ndarray:
        with np.errstate(over="ignore"):
            return np.exp(self.log_mu)

    def __len__(self):
        return len(self.exponents)

    def __eq__(self, other):
        if not isinstance(other, FtleSpectrum):
            return NotImplemented
        return (
            self.depth_j == other.depth_j
            and np.array_equal(self.log_mu, other.log_mu)
            and np.array_equal(self.exponents, other.exponents)
            and self.input_id == other.input_id
        )


@dataclass(frozen=True)
class DynamicsReport:
    """Chaos band of a spectrum plus the volume-contraction flag.

    ``classification`` is Regular (no positive exponent), Chaotic (one) or
    Hyperchaotic (two or more). ``dissipative`` is independent of it and
    holds when the exponents sum to a negative number.
    """

    max_exponent: float
    sum_exponents: float
    positive_count: int
    classification: str
    dissipative: bool
    edge_distance: float


def explicit_sensitivity(ch: JacobianChain) -> np.ndarray:
    """Multiply the chain out: factors[j-1] @ ... @ factors[0]."""
    if len(ch) == 0:
        raise ValueError("empty Jacobian chain")
    m = ch.factors[0]
    with np.errstate(over="ignore", invalid="ignore"):
        for q, f in enumerate(ch.factors[1:], start=1):
            m = f @ m
            if not np.all(np.isfinite(m)):
                raise NumericalError(
                    f"explicit product overflowed at factor {q}; use product_singular_values_stable", layer=q
                )
    return np.array(m)


def singular_values(m) -> np.ndarray:
    m = np.asarray(m, dtype=np.float64)
    if not np.all(np.isfinite(m)):
        raise ValueError("singular_values needs a finite matrix")
    if m.size == 0:
        return np.zeros(0)
    s = np.linalg.svd(m, compute_uv=False)
    return s[np.argsort(-s, kind="stable")]


def explicit_log_singular_values(ch: JacobianChain) -> np.ndarray:
    """Naive route: SVD of the multiplied-out chain, in logs."""
    with np.errstate(divide="ignore"):
        return np.log(singular_values(explicit_sensitivity(ch)))


def product_singular_values_stable(ch: JacobianChain) -> np.ndarray:
    """Log singular values of the chain product, computed without forming it."""
    if len(ch) == 0:
        raise ValueError("empty Jacobian chain")
    d_out, d_in = ch.shape
    return productsvd.log_singular_values(ch.factors, pad_to=min(d_out, d_in))


def ftle(log_mu, depth_j: int, input_id=None) -> FtleSpectrum:
    if depth_j < 1:
        raise ValueError(f"depth must be at least 1, got {depth_j}")
    log_mu = np.array(log_mu, dtype=np.float64)
    log_mu = log_mu[np.argsort(-log_mu, kind="stable")]
    log_mu.setflags(write=False)
    lam = log_mu / depth_j
    lam.setflags(write=False)
    return FtleSpectrum(int(depth_j), log_mu, lam, input_id)


def classify(spec: FtleSpectrum) -> DynamicsReport:
    lam = np.asarray(spec.exponents)
    if lam.size == 0:
        raise ValueError("cannot classify an empty spectrum")
    positive = int(np.sum(lam > 0))
    if positive >= 2:
        band = HYPERCHAOTIC
    elif positive == 1:
        band = CHAOTIC
    else:
        band = REGULAR
    max_lam = float(np.max(lam))
    total = float(np.sum(lam))
    return DynamicsReport(max_lam, total, positive, band, total < 0, abs(max_lam))


def analyze(net: NetworkSpec, y0, j: int | None = None, input_id=None):
    """forward -> Jacobian chain -> stable log-SVD -> exponents -> report."""
    j = net.n_transitions if j is None else j
    if not 1 <= j <= net.n_transitions:
        raise ValueError(f"depth must be in 1..{net.n_transitions}, got {j}")
    traj = forward(net, y0, input_id=input_id, depth=j)
    ch = chain(net, traj, j)
    spec = ftle(product_singular_values_stable(ch), j, input_id)
    return traj, spec, classify(spec)


def dual_path_error(ch: JacobianChain, resolvable: float = 16.0) -> float:
    """Largest log-domain disagreement between the naive and stable routes.

    Differences are relative to max(1, |log mu|). The explicit product only
    carries singular values down to about eps * mu_max, so entries more
    than ``resolvable`` below the top log singular value are left out.
    Entries where both routes give -inf count as agreement.
    """
    a = product_singular_values_stable(ch)
    b = explicit_log_singular_values(ch)
    both_zero = np.isneginf(a) & np.isneginf(b)
    with np.errstate(invalid="ignore"):
        err = np.abs(a - b) / np.maximum(1.0, np.abs(b))
    err[both_zero] = 0.0
    if a.size and np.isfinite(a[0]):
        err = err[a >= a[0] - resolvable]
    return float(np.max(err)) if err.size else 0.0


# -- CSV reports -------------------------------------------------------------

REPORT_COLUMNS = (
    "row",
    "input_id",
    "depth_j",
    "k",
    "mu_log",
    "lambda",
    "max_lambda",
    "sum_lambda",
    "positive_count",
    "classification",
    "dissipative",
)


def report_rows(spec: FtleSpectrum, report: DynamicsReport):
    """One 'spectrum' row per exponent followed by one 'summary' row."""
    iid = "" if spec.input_id is None else str(spec.input_id)
    for k, (lm, lam) in enumerate(zip(spec.log_mu, spec.exponents)):
        yield ["spectrum", iid, str(spec.depth_j), str(k), fmt_float(lm), fmt_float(lam), "", "", "", "", ""]
    yield [
        "summary",
        iid,
        str(spec.depth_j),
        "",
        "",
        "",
        fmt_float(report.max_exponent),
        fmt_float(report.sum_exponents),
        str(report.positive_count),
        report.classification,
        "true" if report.dissipative else "false",
    ]
