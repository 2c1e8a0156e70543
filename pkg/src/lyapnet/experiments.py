"""Seeded studies of how architecture moves the FTLE spectrum.

Each study is a pure function of its arguments and returns an
``ExperimentReport``; ``write_report`` turns that into ``<name>.csv`` and
``<name>.meta.json``. Directional expectations are recorded next to the
observed fractions and never asserted.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from ._io import write_csv, write_json
from ._parallel import pmap
from .activations import ActivationKind, identity, parse, relu, steep_step, tanh
from .errors import NumericalError, TrainingDivergedError
from .generators import GeneratorConfig, generate, prune
from .jacobian import chain
from .network import NetworkSpec, forward
from .spectral import (
    analyze,
    dual_path_error,
    explicit_sensitivity,
    ftle,
    product_singular_values_stable,
    singular_values,
)
from .trainer import TrainConfig, make_dataset, mse, train


@dataclass
class ScalingResult:
    knob: str
    values: list
    means: list
    fitted_exponent: float
    fit_residual: float
    seeds_per_point: int
    frobenius_means: list = field(default_factory=list)
    frobenius_exponent: float = math.nan
    frobenius_residual: float = math.nan
    max_means: list = field(default_factory=list)
    max_exponent: float = math.nan


@dataclass
class ExperimentReport:
    name: str
    header: list
    rows: list
    summary: dict
    config: dict


def write_report(report: ExperimentReport, out_dir) -> list:
    """Write ``<name>.csv`` and ``<name>.meta.json``; returns both paths."""
    csv_path = os.path.join(out_dir, f"{report.name}.csv")
    meta_path = os.path.join(out_dir, f"{report.name}.meta.json")
    write_csv(csv_path, report.header, report.rows)
    write_json(
        meta_path,
        {"experiment": report.name, "version": __version__, "config": report.config, "summary": _jsonable(report.summary)},
    )
    return [csv_path, meta_path]


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else ("-inf" if x == -math.inf else "inf" if x == math.inf else "nan")
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def _seeds(seeds) -> list:
    return list(range(seeds)) if isinstance(seeds, int) else [int(s) for s in seeds]


def _input(seed: int, dim: int, scale: float = 1.0) -> np.ndarray:
    # separate stream from the generator's so inputs do not alias weights
    return scale * np.random.default_rng([int(seed), 0x1A7E]).normal(size=dim)


def fit_loglog(x, y):
    """Least-squares slope of ln y against ln x and the RMS residual of the fit."""
    lx, ly = np.log(np.asarray(x, dtype=float)), np.log(np.asarray(y, dtype=float))
    A = np.column_stack([lx, np.ones_like(lx)])
    coef, *_ = np.linalg.lstsq(A, ly, rcond=None)
    resid = ly - A @ coef
    return float(coef[0]), float(np.sqrt(np.mean(resid**2)))


def _log_mu(net: NetworkSpec, y0, j: int):
    """Log singular values at depth j; explicit route when it stays finite."""
    traj = forward(net, y0, depth=j)
    ch = chain(net, traj, j)
    try:
        with np.errstate(divide="ignore"):
            return np.log(singular_values(explicit_sensitivity(ch)))
    except NumericalError:
        return product_singular_values_stable(ch)


# -- width scaling -----------------------------------------------------------


def width_scaling(
    widths=(16, 32, 64, 128, 256),
    p: float = 1.0,
    s: float = 1.0,
    normalization: str = "none",
    depth: int = 1,
    seeds=100,
    activation: ActivationKind | None = None,
    update_form: str = "plain",
    dt: float = 1.0,
):
    """Mean singular value and Frobenius norm of the sensitivity matrix vs width.

    Returns ``(ScalingResult, ExperimentReport)``.
    """
    widths = [int(w) for w in widths]
    if any(b <= a for a, b in zip(widths, widths[1:])):
        raise ValueError("widths must be strictly increasing")
    seeds = _seeds(seeds)
    activation = identity() if activation is None else activation
    base = GeneratorConfig(
        widths[0], depth + 1, p, s, normalization, activation, update_form, dt, 0
    )

    def one(args):
        D, seed = args
        net = generate(base.replace(width_D=D, seed=seed))
        with np.errstate(over="ignore"):
            mu = np.exp(_log_mu(net, _input(seed, D), depth))
        return D, seed, float(np.mean(mu)), float(np.max(mu)), float(np.sqrt(np.sum(mu**2)))

    samples = pmap(one, [(D, seed) for D in widths for seed in seeds])
    rows = [["sample", D, seed, m, mx, fr, "", ""] for D, seed, m, mx, fr in samples]
    means, maxes, frobs = [], [], []
    for D in widths:
        pts = [x for x in samples if x[0] == D]
        means.append(float(np.mean([x[2] for x in pts])))
        maxes.append(float(np.mean([x[3] for x in pts])))
        frobs.append(float(np.mean([x[4] for x in pts])))
        rows.append(["point", D, "", means[-1], maxes[-1], frobs[-1], "", ""])
    slope, resid = fit_loglog(widths, means)
    fslope, fresid = fit_loglog(widths, frobs)
    mslope, mresid = fit_loglog(widths, maxes)
    rows.append(["fit_mean_mu", "", "", "", "", "", slope, resid])
    rows.append(["fit_max_mu", "", "", "", "", "", mslope, mresid])
    rows.append(["fit_frobenius", "", "", "", "", "", fslope, fresid])
    result = ScalingResult(
        "width", widths, means, slope, resid, len(seeds), frobs, fslope, fresid, maxes, mslope
    )
    predicted = {"none": (0.5, 1.0), "column_sum1": (-0.5, 0.0)}[normalization]
    summary = {
        "fitted_exponent": slope,
        "fit_residual": resid,
        "frobenius_exponent": fslope,
        "frobenius_residual": fresid,
        "max_mu_exponent": mslope,
        "expected_mean_mu_exponent": predicted[0],
        "expected_frobenius_exponent": predicted[1],
        "means": means,
        "frobenius_means": frobs,
        "weight_distribution": "gaussian",
    }
    config = dict(
        widths=widths, p=p, s=s, normalization=normalization, depth=depth, seeds=seeds,
        activation=activation.to_dict(), update_form=update_form, dt=dt,
    )
    header = ["row", "width", "seed", "mean_mu", "max_mu", "frobenius", "fitted_exponent", "fit_residual"]
    return result, ExperimentReport("width-scaling", header, rows, summary, config)


# -- activation comparison ---------------------------------------------------

DEFAULT_KINDS = ("steep_step:50", "tanh:1", "sigmoid:1", "relu", "elu:1", "swish:1")


def _safe_analyze(net, y0, j=None):
    try:
        _, spec, rep = analyze(net, y0, j)
        return spec, rep
    except (NumericalError, FloatingPointError):
        return None, None


def activation_comparison(
    kinds=DEFAULT_KINDS,
    depth: int = 6,
    width: int = 16,
    s: float = 0.1,
    seeds=20,
    p: float = 1.0,
    init: str = "gaussian",
):
    """Distribution of the top exponent over seeds, per activation kind.

    The default weight scale is small on purpose: at ``s=1`` a steep step
    saturates almost everywhere, its derivative vanishes and its top
    exponent sits far below that of tanh.
    """
    kinds = [parse(k) if isinstance(k, str) else k for k in kinds]
    seeds = _seeds(seeds)
    base = GeneratorConfig(width, depth + 1, p, s, activation=identity(), seed=0, init=init)

    def one(args):
        kind, seed = args
        net = generate(base.replace(activation=kind, seed=seed))
        spec, rep = _safe_analyze(net, _input(seed, width))
        if rep is None:
            return [str(kind), seed, math.nan, math.nan, "", "", "diverged"]
        return [str(kind), seed, rep.max_exponent, rep.sum_exponents, rep.positive_count, rep.classification, "ok"]

    rows = pmap(one, [(k, seed) for k in kinds for seed in seeds])
    by_kind = {str(k): np.array([r[2] for r in rows if r[0] == str(k)]) for k in kinds}
    summary = {"median_max_lambda": {}, "finite_fraction": {}}
    for name, vals in by_kind.items():
        fin = vals[np.isfinite(vals)]
        summary["median_max_lambda"][name] = float(np.median(fin)) if fin.size else math.nan
        summary["finite_fraction"][name] = float(fin.size / vals.size)
    summary["finite_fraction_overall"] = float(np.mean([np.isfinite(r[2]) for r in rows]))
    step_name, relu_name, tanh_name = str(steep_step(50.0)), str(relu()), str(tanh(1.0))
    if step_name in by_kind and relu_name in by_kind:
        a, b = by_kind[step_name], by_kind[relu_name]
        ok = np.isfinite(a) & np.isfinite(b)
        summary["steep_step_beats_relu_fraction"] = float(np.mean(a[ok] > b[ok])) if ok.any() else math.nan
        summary["expectation_relu"] = "spiky S-shaped activations reach larger top exponents than ReLU"
    if step_name in by_kind and tanh_name in by_kind:
        summary["steep_step_median_above_tanh"] = bool(
            summary["median_max_lambda"][step_name] > summary["median_max_lambda"][tanh_name]
        )
        summary["expectation_tanh"] = "steep_step(50) median top exponent above tanh(1)"
    config = dict(kinds=[k.to_dict() for k in kinds], depth=depth, width=width, s=s, seeds=seeds, p=p, init=init)
    header = ["activation", "seed", "max_lambda", "sum_lambda", "positive_count", "classification", "status"]
    return ExperimentReport("activation", header, rows, summary, config)


# -- depth profile -----------------------------------------------------------


def depth_profile(family, depths, seeds=10, input_scale: float = 1.0, check_dual_path: bool = True):
    """Exponent statistics at increasing depth along the same trajectories.

    ``family`` is a GeneratorConfig (its depth is raised to cover ``depths``)
    or a callable ``seed -> NetworkSpec``.
    """
    depths = [int(d) for d in depths]
    if any(b <= a for a, b in zip(depths, depths[1:])) or depths[0] < 1:
        raise ValueError("depths must be positive and strictly increasing")
    seeds = _seeds(seeds)
    if isinstance(family, GeneratorConfig):
        cfg = family.replace(depth_N=max(family.depth_N, depths[-1] + 1))
        make = lambda seed: generate(cfg.replace(seed=seed))  # noqa: E731
        config = {"family": cfg.to_dict()}
    else:
        make = family
        config = {"family": getattr(family, "__name__", "callable")}

    def one(seed):
        net = make(seed)
        out = []
        try:
            traj = forward(net, _input(seed, net.input_dim, input_scale), depth=depths[-1])
        except NumericalError:
            return [[seed, j, math.nan, math.nan, math.nan, "", "diverged"] for j in depths]
        for j in depths:
            ch = chain(net, traj, j)
            spec = ftle(product_singular_values_stable(ch), j)
            lam = spec.exponents
            fin = lam[np.isfinite(lam)]
            err = ""
            if check_dual_path:
                try:
                    err = dual_path_error(ch)
                except NumericalError:
                    err = ""
            out.append([seed, j, float(lam[0]), float(np.mean(fin)) if fin.size else -math.inf,
                        float(np.sum(lam)), err, "ok"])
        return out

    rows = []
    for block in pmap(one, seeds):
        rows.extend(["sample"] + r for r in block)
    mean_max, max_max, mean_mean = [], [], []
    for j in depths:
        vals = np.array([r[3] for r in rows if r[0] == "sample" and r[2] == j])
        means = np.array([r[4] for r in rows if r[0] == "sample" and r[2] == j])
        vals_f = vals[np.isfinite(vals)]
        mean_max.append(float(np.mean(vals_f)) if vals_f.size else math.nan)
        max_max.append(float(np.max(vals_f)) if vals_f.size else math.nan)
        mean_mean.append(float(np.mean(means[np.isfinite(means)])) if np.isfinite(means).any() else math.nan)
        rows.append(["depth", "", j, mean_max[-1], mean_mean[-1], "", "", ""])
    errs = [r[6] for r in rows if r[0] == "sample" and r[6] != ""]
    summary = {
        "depths": depths,
        "mean_max_lambda": mean_max,
        "max_max_lambda": max_max,
        "mean_lambda": mean_mean,
        "max_dual_path_error": float(max(errs)) if errs else math.nan,
    }
    config.update(depths=depths, seeds=seeds, input_scale=input_scale)
    header = ["row", "seed", "depth_j", "max_lambda", "mean_lambda", "sum_lambda", "dual_path_error", "status"]
    return ExperimentReport("depth-profile", header, rows, summary, config)


# -- regularisation / overfitting --------------------------------------------


def default_overfit_generator() -> GeneratorConfig:
    return GeneratorConfig(width_D=32, depth_N=7, weight_scale_s=0.25, activation=tanh(1.0), seed=0)


def default_overfit_training() -> TrainConfig:
    return TrainConfig(epochs=150, learning_rate=0.05, batch_size=10, weight_decay=0.0, seed=0)


def _mean_spectrum_stats(net, inputs):
    maxes, sums, diss = [], [], []
    for i, y0 in enumerate(inputs):
        spec, rep = _safe_analyze(net, y0)
        if rep is None:
            return math.nan, math.nan, math.nan
        maxes.append(rep.max_exponent)
        sums.append(rep.sum_exponents)
        diss.append(rep.dissipative)
    return float(np.mean(maxes)), float(np.mean(sums)), float(np.mean(diss))


def _finite_median(values):
    v = np.asarray(values, dtype=float)
    v = v[np.isfinite(v)]
    return float(np.median(v)) if v.size else math.nan


def overfit_study(
    generator: GeneratorConfig | None = None,
    training: TrainConfig | None = None,
    weight_decay: float = 0.01,
    data_kind: str = "noisy_sine",
    n_train: int = 40,
    n_test: int = 200,
    noise: float = 0.1,
    seeds=20,
):
    """Train each seed with and without weight decay and compare top exponents.

    The top exponent is averaged over the training inputs at full depth.
    """
    generator = default_overfit_generator() if generator is None else generator
    training = default_overfit_training() if training is None else training
    seeds = _seeds(seeds)
    D = generator.width_D

    def one(seed):
        net0 = generate(generator.replace(seed=seed))
        data = make_dataset(data_kind, n_train, noise, seed=[seed, 1]).lift(D)
        test = make_dataset(data_kind, n_test, noise, seed=[seed, 2]).lift(D)
        out = []
        for variant, wd in (("baseline", 0.0), ("regularized", float(weight_decay))):
            cfg = training.replace(weight_decay=wd, seed=seed)
            try:
                net, hist = train(net0, data, cfg)
            except TrainingDivergedError as exc:
                out.append([seed, variant, wd, f"diverged@{exc.epoch}", math.nan, math.nan, math.nan, math.nan, math.nan])
                continue
            mx, sm, diss = _mean_spectrum_stats(net, data.inputs)
            out.append([seed, variant, wd, "ok", hist[-1], mse(net, test), mx, sm, diss])
        return out

    rows = [r for block in pmap(one, seeds) for r in block]
    base = {r[0]: r for r in rows if r[1] == "baseline"}
    reg = {r[0]: r for r in rows if r[1] == "regularized"}
    paired = [s for s in seeds if np.isfinite(base[s][6]) and np.isfinite(reg[s][6])]
    lower = [reg[s][6] < base[s][6] for s in paired]
    summary = {
        "expectation": "regularized training yields a lower top FTLE than unregularized training",
        "observed_fraction_regularized_lower": float(np.mean(lower)) if lower else math.nan,
        "finite_fraction": float(np.mean([np.isfinite(r[6]) for r in rows])),
        "paired_seeds": len(paired),
        "median_test_loss": {
            "baseline": _finite_median([base[s][5] for s in seeds]),
            "regularized": _finite_median([reg[s][5] for s in seeds]),
        },
    }
    config = dict(
        generator=generator.to_dict(), training=training.to_dict(), weight_decay=weight_decay,
        data_kind=data_kind, n_train=n_train, n_test=n_test, noise=noise, seeds=seeds,
    )
    header = ["seed", "variant", "weight_decay", "status", "train_loss", "test_loss",
              "mean_max_lambda", "mean_sum_lambda", "dissipative_fraction"]
    return ExperimentReport("overfit", header, rows, summary, config)


# -- pruning -----------------------------------------------------------------


def default_prune_generator() -> GeneratorConfig:
    return GeneratorConfig(width_D=16, depth_N=7, weight_scale_s=1.0, activation=tanh(1.0), seed=0)


def prune_study(generator: GeneratorConfig | None = None, fractions=None, seeds=20):
    """Top exponent of magnitude-pruned copies of each seeded network."""
    generator = default_prune_generator() if generator is None else generator
    D = generator.width_D
    if fractions is None:
        fractions = [0.0, 0.25, 0.5, 0.75, (D - 1) / D]
    fractions = [float(f) for f in fractions]
    if 0.0 not in fractions:
        raise ValueError("fractions must include 0 (the unpruned reference)")
    seeds = _seeds(seeds)

    def one(seed):
        net = generate(generator.replace(seed=seed))
        y0 = _input(seed, net.input_dim)
        out = []
        for f in fractions:
            spec, rep = _safe_analyze(prune(net, f), y0)
            if rep is None:
                out.append([f, seed, math.nan, math.nan, math.nan, "", "diverged"])
            else:
                out.append([f, seed, rep.max_exponent, abs(rep.max_exponent), rep.sum_exponents,
                            rep.classification, "ok"])
        return out

    rows = [r for block in pmap(one, seeds) for r in block]
    mean_abs = {}
    for f in fractions:
        v = np.array([r[3] for r in rows if r[0] == f])
        v = v[np.isfinite(v)]
        mean_abs[f] = float(np.mean(v)) if v.size else math.nan
    f_max = max(fractions)
    dense = {r[1]: r[2] for r in rows if r[0] == 0.0}
    sparse = {r[1]: r[2] for r in rows if r[0] == f_max}
    ok = [s for s in seeds if np.isfinite(dense[s]) and np.isfinite(sparse[s])]
    summary = {
        "expectation": "heavier pruning lowers the top FTLE of a mixing network",
        "observed_fraction_pruned_lower": float(np.mean([sparse[s] < dense[s] for s in ok])) if ok else math.nan,
        "mean_abs_lambda1": {str(f): v for f, v in mean_abs.items()},
        "sparsest_reduces_mean_abs_lambda1": bool(mean_abs[f_max] < mean_abs[0.0]),
        "finite_fraction": float(np.mean([np.isfinite(r[2]) for r in rows])),
    }
    config = dict(generator=generator.to_dict(), fractions=fractions, seeds=seeds)
    header = ["fraction", "seed", "max_lambda", "abs_lambda1", "sum_lambda", "classification", "status"]
    return ExperimentReport("prune", header, rows, summary, config)

