import mpmath
import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from lyapnet.activations import elu, sigmoid, swish, tanh
from lyapnet.generators import GeneratorConfig, generate

settings.register_profile("repo", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("repo")

SMOOTH = (tanh(1.0), sigmoid(1.0), swish(1.0), elu(1.0), tanh(2.0))

# (criterion number, title, passed, detail) rows filled in by test_acceptance
ACCEPTANCE = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for num, title, passed, detail in sorted(ACCEPTANCE):
        terminalreporter.write_line(f"criterion {num}: {'PASS' if passed else 'FAIL'}  {title}  ({detail})")


def mp_log_singular_values(factors, dps=40):
    """Log singular values of the product in extended precision."""
    with mpmath.workdps(dps):
        M = mpmath.matrix(np.asarray(factors[0]).tolist())
        for f in factors[1:]:
            M = mpmath.matrix(np.asarray(f).tolist()) * M
        s = mpmath.svd_r(M, compute_uv=False)
        logs = [float(mpmath.log(x)) if x > 0 else -np.inf for x in s]
    return np.array(sorted(logs, reverse=True))


def log_rel_err(a, b):
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    both = np.isneginf(a) & np.isneginf(b)
    with np.errstate(invalid="ignore"):
        err = np.abs(a - b) / np.maximum(1.0, np.abs(b))
    err[both] = 0.0
    return err


def small_net(seed, activation=None, D=None, depth=None, s=None, update_form="plain", dt=1.0):
    """Seeded small network; unspecified knobs are drawn from the seed."""
    rng = np.random.default_rng([seed, 99])
    D = int(rng.integers(1, 9)) if D is None else D
    depth = int(rng.integers(1, 7)) if depth is None else depth
    s = float(rng.uniform(0.3, 1.5)) if s is None else s
    act = SMOOTH[seed % len(SMOOTH)] if activation is None else activation
    cfg = GeneratorConfig(D, depth + 1, 1.0, s, "none", act, update_form, dt, seed)
    return generate(cfg), rng.normal(size=D)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
