"""Acceptance gates. Each test records one PASS/FAIL line, printed at the end of the run."""

import json
import math
import time
from pathlib import Path

import numpy as np
import pytest

from lyapnet.activations import elu, sigmoid, swish, tanh
from lyapnet.cli import main
from lyapnet.generators import GeneratorConfig, delay_embed, embed_input, generate
from lyapnet.jacobian import JacobianChain, chain, finite_difference_sensitivity
from lyapnet.network import forward
from lyapnet.spectral import (
    CHAOTIC,
    HYPERCHAOTIC,
    REGULAR,
    classify,
    explicit_log_singular_values,
    explicit_sensitivity,
    ftle,
    product_singular_values_stable,
)
from lyapnet.trainer import Dataset, loss_and_gradients

from conftest import ACCEPTANCE, log_rel_err, mp_log_singular_values, small_net
from test_trainer import _numeric_gradients

ROOT = Path(__file__).resolve().parents[1]
CONFIGS = ROOT / "configs"
DATA = ROOT / "data"
QUARTER_CIRCLE = 8 / (3 * math.pi)
SMOOTH = (tanh(1.0), sigmoid(1.0), swish(1.0), elu(1.0), tanh(2.0))


def record(num, title, passed, detail):
    ACCEPTANCE.append((num, title, bool(passed), detail))
    print(f"criterion {num}: {'PASS' if passed else 'FAIL'}  {title}  ({detail})")
    return passed


def _cli(*args):
    return main(["-q", *map(str, args)])


def _seeded_chain(seed):
    rng = np.random.default_rng([seed, 7])
    D, depth = int(rng.integers(1, 9)), int(rng.integers(1, 7))
    cfg = GeneratorConfig(D, depth + 1, 1.0, float(rng.uniform(0.3, 2.0)), activation=SMOOTH[seed % 5], seed=seed)
    net = generate(cfg)
    return chain(net, forward(net, rng.uniform(-2, 2, D)))


@pytest.fixture(scope="module")
def shipped_runs(tmp_path_factory):
    """Each shipped experiment config run once through the CLI, with wall time."""
    runs = {}
    for name, cfg in [
        ("width-scaling", "width_scaling.json"),
        ("activation", "activation.json"),
        ("depth-profile", "depth_profile.json"),
        ("overfit", "overfit.json"),
        ("prune", "prune.json"),
    ]:
        out = tmp_path_factory.mktemp(name)
        t0 = time.perf_counter()
        code = _cli("experiment", name, "--config", CONFIGS / cfg, "--out", out)
        runs[name] = (code, out, time.perf_counter() - t0)
    out = tmp_path_factory.mktemp("width-scaling-cs1")
    t0 = time.perf_counter()
    code = _cli("experiment", "width-scaling", "--config", CONFIGS / "width_scaling_column_sum1.json", "--out", out)
    runs["width-scaling-cs1"] = (code, out, time.perf_counter() - t0)
    return runs


def _summary(runs, name, stem=None):
    code, out, _ = runs[name]
    assert code == 0
    return json.loads((out / f"{stem or name}.meta.json").read_text())["summary"]


def test_criterion_1_oracle_equivalence():
    t0 = time.perf_counter()
    worst_mp = worst_float = 0.0
    n = 500
    for seed in range(n):
        ch = _seeded_chain(seed)
        stable = product_singular_values_stable(ch)
        ref = mp_log_singular_values(ch.factors)
        keep = ref >= -30
        worst_mp = max(worst_mp, float(np.max(log_rel_err(stable, ref)[keep], initial=0)))
        # the float64 product only resolves mu down to about eps * mu_max
        naive = explicit_log_singular_values(ch)
        keep_f = keep & (naive >= naive[0] - 16)
        worst_float = max(worst_float, float(np.max(log_rel_err(stable, naive)[keep_f], initial=0)))
    elapsed = time.perf_counter() - t0
    ok = worst_mp <= 1e-8 and worst_float <= 1e-8 and elapsed <= 60
    detail = f"{n} chains, max rel err {worst_mp:.1e} vs 40-digit product, {worst_float:.1e} vs float64 product, {elapsed:.1f}s"
    assert record(1, "stable path matches explicit-product SVD", ok, detail)


def test_criterion_2_gradient_checks():
    worst_chain, cases = 0.0, 0
    for seed in range(120):
        net, y0 = small_net(seed, SMOOTH[seed % 5], update_form=["plain", "residual"][seed % 2], dt=0.5)
        j = net.n_transitions
        analytic = explicit_sensitivity(chain(net, forward(net, y0)))
        worst_chain = max(worst_chain, float(np.max(np.abs(analytic - finite_difference_sensitivity(net, y0, j)))))
        cases += 1
    worst_train, nets = 0.0, 0
    for seed in range(20):
        net, _ = small_net(seed, SMOOTH[seed % 5], D=3, depth=3, update_form=["plain", "residual"][seed % 2], dt=0.5)
        rng = np.random.default_rng(seed)
        data = Dataset(rng.normal(size=(6, 3)), rng.normal(size=(6, 3)))
        _, dKs, dbs = loss_and_gradients(net, data, 0.05)
        analytic = [g for pair in zip(dKs, dbs) for g in pair]
        for a, b in zip(analytic, _numeric_gradients(net, data, 0.05)):
            worst_train = max(worst_train, float(np.max(np.abs(a - b))))
        nets += 1
    ok = worst_chain <= 1e-5 and worst_train <= 1e-5
    detail = f"{cases} chains max err {worst_chain:.1e}; {nets} trainer nets max err {worst_train:.1e}"
    assert record(2, "analytic derivatives match central differences", ok, detail)


def test_criterion_3_sum_rule():
    worst, n = 0.0, 0
    for seed in range(200):
        net, y0 = small_net(seed, SMOOTH[seed % 5])
        ch = chain(net, forward(net, y0))
        logdet = sum(np.linalg.slogdet(f)[1] for f in ch.factors)
        if not np.isfinite(logdet):
            continue
        total = float(np.sum(product_singular_values_stable(ch)))
        worst = max(worst, abs(total - logdet) / max(1.0, abs(logdet)))
        n += 1
    ok = n >= 200 and worst <= 1e-8
    assert record(3, "sum of log mu equals sum of log|det|", ok, f"{n} chains, max rel err {worst:.1e}")


def test_criterion_4_quarter_circle(shipped_runs):
    s = _summary(shipped_runs, "width-scaling")
    elapsed = shipped_runs["width-scaling"][2]
    target = QUARTER_CIRCLE * 16
    rel = abs(s["means"][-1] - target) / target
    ok = (
        rel <= 0.02
        and 0.4 <= s["fitted_exponent"] <= 0.6
        and s["fit_residual"] <= 0.05
        and 0.9 <= s["frobenius_exponent"] <= 1.1
        and elapsed <= 120
    )
    detail = (
        f"mean mu at D=256 {s['means'][-1]:.4f} vs {target:.4f} ({rel:.2%}), exponent {s['fitted_exponent']:.4f}, "
        f"residual {s['fit_residual']:.4f}, Frobenius slope {s['frobenius_exponent']:.4f}, {elapsed:.1f}s"
    )
    assert record(4, "mean singular value grows like sqrt(D)", ok, detail)


def test_criterion_5_column_sum1(shipped_runs):
    s = _summary(shipped_runs, "width-scaling-cs1", "width-scaling")
    ok = -0.65 <= s["fitted_exponent"] <= -0.35 and s["fit_residual"] <= 0.05 and -0.1 <= s["frobenius_exponent"] <= 0.1
    detail = (
        f"exponent {s['fitted_exponent']:.4f}, residual {s['fit_residual']:.4f}, "
        f"Frobenius slope {s['frobenius_exponent']:.4f}"
    )
    assert record(5, "column-normalized mean singular value falls like 1/sqrt(D)", ok, detail)


def test_criterion_6_classification_truth_table():
    table = [
        ([0.0, 0.0], REGULAR, False),
        ([-0.1, -0.2], REGULAR, True),
        ([0.0, -np.inf], REGULAR, True),
        ([0.3, -0.1], CHAOTIC, False),
        ([0.1, -0.5], CHAOTIC, True),
        ([0.2, -0.2], CHAOTIC, False),
        ([0.3, 0.2], HYPERCHAOTIC, False),
        ([0.3, 0.2, -0.6], HYPERCHAOTIC, True),
        ([1e-300, 1e-300, 0.0], HYPERCHAOTIC, False),
    ]
    bad = []
    for lam, band, diss in table:
        r = classify(ftle(lam, 1))
        if (r.classification, r.dissipative, r.positive_count) != (band, diss, sum(x > 0 for x in lam)):
            bad.append(lam)
    covered = {(band, diss) for _, band, diss in table}
    ok = not bad and len(covered) == 6
    assert record(6, "classification bands and dissipative flag", ok, f"{len(table)} spectra, {len(covered)}/6 cells, {len(bad)} wrong")


def test_criterion_7_delay_embedding():
    worst_y, exact_x, n = 0.0, True, 0
    for seed in range(25):
        rng = np.random.default_rng(seed)
        D = int(rng.integers(1, 10))
        net = generate(GeneratorConfig(D, int(rng.integers(2, 8)), weight_scale_s=1.0, activation=SMOOTH[seed % 5], seed=seed))
        y0 = rng.normal(size=D)
        base = forward(net, y0)
        emb = forward(delay_embed(net), embed_input(y0))
        for q, state in enumerate(emb.states):
            scale = max(1.0, float(np.max(np.abs(base.states[q]))))
            worst_y = max(worst_y, float(np.max(np.abs(state[:D] - base.states[q]))) / scale)
            if q >= 1 and not np.array_equal(state[D:], emb.states[q - 1][:D]):
                exact_x = False
        n += 1
    # rounding from the wider matmul compounds over up to seven layers
    ok = n >= 20 and worst_y <= 1e-14 and exact_x
    detail = f"{n} nets, max y-block deviation {worst_y:.1e}, x-block exact: {exact_x}"
    assert record(7, "delay embedding reproduces and records the trajectory", ok, detail)


def test_criterion_8_cli_determinism(shipped_runs, tmp_path):
    outputs = {}
    for rep in ("a", "b"):
        d = tmp_path / rep
        d.mkdir()
        codes = [
            _cli("generate", "--config", CONFIGS / "generate_example.json", "--out", d / "net.json"),
            _cli("analyze", "--network", DATA / "example_net.json", "--inputs", DATA / "example_inputs.csv",
                 "--out", d / "analyze.csv"),
            _cli("train", "--config", CONFIGS / "train_linear.json", "--data-kind", "linear", "--out", d / "trained.json"),
        ]
        assert codes == [0, 0, 0]
        outputs[rep] = {p.name: p.read_bytes() for p in d.iterdir()}
    same = outputs["a"] == outputs["b"]
    files = len(outputs["a"])
    # rerun every study and compare with the fixture's first run
    for name, (code, first, _) in shipped_runs.items():
        cfg = {"width-scaling-cs1": "width_scaling_column_sum1.json"}.get(name, name.replace("-", "_") + ".json")
        stem = "width-scaling" if name.startswith("width") else name
        again = tmp_path / f"again-{name}"
        assert _cli("experiment", stem, "--config", CONFIGS / cfg, "--out", again) == 0
        for suffix in (".csv", ".meta.json"):
            same &= (first / f"{stem}{suffix}").read_bytes() == (again / f"{stem}{suffix}").read_bytes()
            files += 1
    assert record(8, "CLI reruns are byte-identical", same, f"{files} output files compared")


def test_criterion_9_directional_studies(shipped_runs):
    total = sum(shipped_runs[n][2] for n in ("activation", "overfit", "prune"))
    act = _summary(shipped_runs, "activation")
    over = _summary(shipped_runs, "overfit")
    pru = _summary(shipped_runs, "prune")
    finite = [act["finite_fraction_overall"], over["finite_fraction"], pru["finite_fraction"]]
    fractions = [act["steep_step_beats_relu_fraction"], over["observed_fraction_regularized_lower"],
                 pru["observed_fraction_pruned_lower"]]
    has_expectations = all("expectation" in " ".join(s) for s in (act, over, pru))
    ok = total <= 300 and min(finite) >= 0.9 and has_expectations and all(np.isfinite(fractions))
    detail = (
        f"{total:.1f}s total, finite fractions {', '.join(f'{x:.2f}' for x in finite)}; observed: "
        f"steep_step>relu {fractions[0]:.2f}, regularized lower {fractions[1]:.2f}, pruned lower {fractions[2]:.2f}, "
        f"steep_step median above tanh: {act['steep_step_median_above_tanh']}"
    )
    assert record(9, "directional studies complete and report expectations", ok, detail)
