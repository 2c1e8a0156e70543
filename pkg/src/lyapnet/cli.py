"""``lyapnet`` command line: generate, train, analyze, experiment.

Exit codes: 0 success, 2 usage or config error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import inspect
import json
import logging
import os
import sys

import numpy as np

from . import experiments as ex
from ._io import atomic_write_text, csv_text, fmt_float
from .activations import ActivationKind, parse
from .errors import ConfigError, NumericalError, ShapeError, TrainingDivergedError
from .generators import GeneratorConfig, generate
from .network import dumps, loads
from .spectral import REPORT_COLUMNS, analyze, report_rows
from .trainer import DATA_KINDS, TrainConfig, make_dataset, train

log = logging.getLogger("lyapnet")

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC = 0, 2, 3


class UsageError(Exception):
    pass


class NumericFailure(Exception):
    pass


# -- file readers ------------------------------------------------------------


def _read_text(path) -> str:
    try:
        with open(path) as fh:
            return fh.read()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from exc


def _read_json(path) -> dict:
    try:
        doc = json.loads(_read_text(path))
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path}: invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    if not isinstance(doc, dict):
        raise UsageError(f"{path}: expected a JSON object")
    return doc


def read_inputs(path, dim: int) -> list:
    """Numeric CSV, one input vector per row; blank and '#' lines are skipped."""
    rows = []
    reader = csv.reader(_read_text(path).splitlines())
    for lineno, fields in enumerate(reader, start=1):
        if not fields or not "".join(fields).strip() or fields[0].lstrip().startswith("#"):
            continue
        try:
            vec = np.array([float(f) for f in fields])
        except ValueError as exc:
            raise UsageError(f"{path}:{lineno}: {exc}") from exc
        if vec.size != dim:
            raise UsageError(f"{path}:{lineno}: expected {dim} values, got {vec.size}")
        if not np.all(np.isfinite(vec)):
            raise UsageError(f"{path}:{lineno}: non-finite value")
        rows.append(vec)
    if not rows:
        raise UsageError(f"{path}: no input rows")
    return rows


def _load_network(path):
    try:
        return loads(_read_text(path))
    except (ConfigError, ShapeError, ValueError) as exc:
        raise UsageError(f"{path}: {exc}") from exc


def _config(cls, doc, where):
    try:
        return cls.from_dict(doc)
    except ConfigError as exc:
        raise UsageError(f"{where}: {exc}") from exc


# -- commands ----------------------------------------------------------------


def cmd_analyze(args) -> list:
    net = _load_network(args.network)
    inputs = read_inputs(args.inputs, net.input_dim)
    j = net.n_transitions if args.depth is None else args.depth
    if not 1 <= j <= net.n_transitions:
        raise UsageError(f"--depth must lie in 1..{net.n_transitions}, got {j}")
    rows = []
    for i, y0 in enumerate(inputs):
        try:
            _, spec, report = analyze(net, y0, j, input_id=i)
        except NumericalError as exc:
            raise NumericFailure(f"input row {i}, layer {exc.layer}: {exc}") from exc
        rows.extend(report_rows(spec, report))
    log.info("analyzed %d inputs at depth %d", len(inputs), j)
    atomic_write_text(args.out, csv_text(REPORT_COLUMNS, rows))
    return [args.out]


def cmd_generate(args) -> list:
    cfg = _config(GeneratorConfig, _read_json(args.config), args.config)
    net = generate(cfg)
    log.info("generated %d transitions of width %d", net.n_transitions, net.widths[-1])
    atomic_write_text(args.out, dumps(net))
    return [args.out]


_TRAIN_SECTIONS = {"generator", "training", "data"}
_DATA_FIELDS = {"n", "noise", "seed", "options"}


def cmd_train(args) -> list:
    doc = _read_json(args.config)
    unknown = set(doc) - _TRAIN_SECTIONS
    if unknown:
        raise UsageError(f"{args.config}: unknown sections {sorted(unknown)}")
    if "generator" not in doc:
        raise UsageError(f"{args.config}: missing 'generator' section")
    gen = _config(GeneratorConfig, doc["generator"], f"{args.config}: generator")
    tcfg = _config(TrainConfig, doc.get("training", {}), f"{args.config}: training")
    data_doc = doc.get("data", {})
    if not isinstance(data_doc, dict) or set(data_doc) - _DATA_FIELDS:
        raise UsageError(f"{args.config}: data section accepts only {sorted(_DATA_FIELDS)}")
    net = generate(gen)
    width = net.widths[-1]
    try:
        data = make_dataset(
            args.data_kind,
            int(data_doc.get("n", 40)),
            float(data_doc.get("noise", 0.0)),
            seed=data_doc.get("seed", 0),
            **data_doc.get("options", {}),
        ).lift(width)
        net, history = train(net, data, tcfg)
    except TrainingDivergedError as exc:
        raise NumericFailure(f"training diverged at epoch {exc.epoch}: {exc}") from exc
    except (ValueError, ShapeError) as exc:
        raise UsageError(str(exc)) from exc
    loss_path = _loss_path(args.out)
    log.info("trained %d epochs, loss %s -> %s", len(history) - 1, fmt_float(history[0]), fmt_float(history[-1]))
    atomic_write_text(args.out, dumps(net))
    atomic_write_text(loss_path, csv_text(["epoch", "loss"], [[e, float(v)] for e, v in enumerate(history)]))
    return [args.out, loss_path]


def _loss_path(out) -> str:
    root, _ = os.path.splitext(out)
    return root + ".loss.csv"


def _generator(value, where):
    if isinstance(value, dict):
        return _config(GeneratorConfig, value, where)
    raise UsageError(f"{where}: expected a generator config object")


def _activation(value, where):
    try:
        return ActivationKind.from_dict(value) if isinstance(value, dict) else parse(value)
    except (ValueError, TypeError) as exc:
        raise UsageError(f"{where}: {exc}") from exc


def _experiment_kwargs(name, fn, doc):
    params = inspect.signature(fn).parameters
    unknown = set(doc) - set(params)
    if unknown:
        raise UsageError(f"{name} config: unknown fields {sorted(unknown)}; accepted: {sorted(params)}")
    kw = dict(doc)
    for key in ("generator", "family"):
        if key in kw:
            kw[key] = _generator(kw[key], f"{name} config: {key}")
    if kw.get("activation") is not None:
        kw["activation"] = _activation(kw["activation"], f"{name} config: activation")
    if "kinds" in kw:
        kw["kinds"] = [_activation(k, f"{name} config: kinds") for k in kw["kinds"]]
    if "training" in kw:
        kw["training"] = _config(TrainConfig, kw["training"], f"{name} config: training")
    if name == "depth-profile" and "family" not in kw:
        raise UsageError("depth-profile config needs a 'family' generator config")
    return kw


def _width_scaling(**kw):
    return ex.width_scaling(**kw)[1]


EXPERIMENTS = {
    "width-scaling": (_width_scaling, ex.width_scaling),
    "activation": (ex.activation_comparison, ex.activation_comparison),
    "depth-profile": (ex.depth_profile, ex.depth_profile),
    "overfit": (ex.overfit_study, ex.overfit_study),
    "prune": (ex.prune_study, ex.prune_study),
}


def cmd_experiment(args) -> list:
    if args.name not in EXPERIMENTS:
        raise UsageError(f"unknown experiment {args.name!r}; valid names: {', '.join(EXPERIMENTS)}")
    run, signature_of = EXPERIMENTS[args.name]
    doc = _read_json(args.config) if args.config else {}
    kw = _experiment_kwargs(args.name, signature_of, doc)
    log.info("running experiment %s", args.name)
    try:
        report = run(**kw)
    except (TypeError, ValueError) as exc:
        raise UsageError(f"{args.name} config: {exc}") from exc
    os.makedirs(args.out, exist_ok=True)
    return ex.write_report(report, args.out)


# -- entry point -------------------------------------------------------------


def _positive_int(text):
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}")
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be at least 1, got {value}")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lyapnet", description=__doc__.splitlines()[0])
    parser.add_argument("-q", "--quiet", action="store_true", help="suppress the per-stage log on stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="FTLE spectra of a network for each input row")
    p.add_argument("--network", required=True)
    p.add_argument("--inputs", required=True)
    p.add_argument("--depth", type=_positive_int, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("generate", help="draw a network from a generator config")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("train", help="generate then train a network on a synthetic task")
    p.add_argument("--config", required=True)
    p.add_argument("--data-kind", required=True, choices=DATA_KINDS)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("experiment", help=f"run a study: {', '.join(EXPERIMENTS)}")
    p.add_argument("name")
    p.add_argument("--config", default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_experiment)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO, format="lyapnet: %(message)s")
    try:
        for path in args.func(args):
            log.info("wrote %s", path)
    except UsageError as exc:
        print(f"lyapnet: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericFailure as exc:
        print(f"lyapnet: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
