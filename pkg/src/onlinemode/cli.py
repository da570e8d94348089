"""Command-line interface: ``onlinemode {estimate,simulate,replicate,trace,sample,verify}``.

Exit codes: 0 success, 1 configuration error, 2 data error, 3 divergence,
4 a ``verify`` check failed.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import re
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import Settings, load_document, resolve
from .distributions import RNG_ALGORITHM, STREAM_BLOCK, sample_stream
from .estimator import _Runner, init_state
from .exceptions import ConfigError, DataError, DivergenceError, OnlineModeError
from .harness import (ExperimentPlan, config_to_dict, replicate, trace_from_initials, write_report_json,
                      write_trace_csv)

EXIT_CONFIG = 1
EXIT_DATA = 2
EXIT_DIVERGED = 3
EXIT_VERIFY_FAILED = 4

_SPLIT = re.compile(r"[,\s]+")
_READ_BLOCK = 8192

log = logging.getLogger("onlinemode")


def _param(text):
    key, sep, value = text.partition("=")
    if not sep or not key:
        raise argparse.ArgumentTypeError(f"expected KEY=VALUE, got {text!r}")
    try:
        return key.strip(), json.loads(value)
    except json.JSONDecodeError:
        raise argparse.ArgumentTypeError(f"value of {key!r} must be a number or JSON list, got {value!r}") from None


def _vector(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _common(parser):
    g = parser.add_argument_group("configuration (flags override the config file)")
    g.add_argument("--config", help="TOML config file")
    g.add_argument("--kernel", choices=["gaussian", "cauchy", "fejer", "multivariate_gaussian"])
    g.add_argument("--epsilon", type=float, help="kernel bandwidth")
    g.add_argument("--lambda", dest="lam", type=float, help="regularization coefficient")
    g.add_argument("--warmup", type=int, help="samples averaged for the starting point")
    g.add_argument("--schedule", dest="form", choices=["harmonic", "polynomial"])
    g.add_argument("--a0", type=float)
    g.add_argument("--n0", type=int)
    g.add_argument("--gamma", type=float)
    g.add_argument("--distribution", help="target distribution name")
    g.add_argument("--param", action="append", type=_param, default=[], metavar="KEY=VALUE",
                   help="distribution parameter, repeatable (e.g. --param sd=2)")
    g.add_argument("--samples", dest="n_samples", type=int, help="samples per run")
    g.add_argument("--runs", dest="n_runs", type=int, help="number of runs")
    g.add_argument("--seed", dest="base_seed", type=lambda v: int(v, 0), help="base seed (run i uses seed+i)")
    g.add_argument("--initial", dest="initial_points", action="append", type=_vector, metavar="X[,Y]",
                   help="initial point for trace, repeatable")
    g.add_argument("--out-dir", dest="out_dir")
    g.add_argument("--trace-every", dest="trace_every", type=int)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="onlinemode", description="Online mode estimation from sample streams")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("estimate", help="estimate the mode of samples read from a file or stdin")
    p.add_argument("input", nargs="?", default="-", help="sample file, one row per sample ('-' for stdin)")
    p.add_argument("--trace", help="write the trajectory CSV (n,m_1,...) here")
    _common(p)

    p = sub.add_parser("simulate", help="estimate the mode of a simulated stream")
    p.add_argument("--trace", help="write the trajectory CSV (n,m_1,...) here")
    _common(p)

    p = sub.add_parser("replicate", help="repeat simulate over seeded runs and write report.json")
    p.add_argument("--jobs", type=int, default=1, help="worker threads")
    _common(p)

    p = sub.add_parser("trace", help="convergence paths from --initial points, written to trace.csv")
    _common(p)

    p = sub.add_parser("sample", help="export a seeded sample stream as CSV rows")
    p.add_argument("--output", "-o", default="-", help="destination file ('-' for stdout)")
    _common(p)

    p = sub.add_parser("verify", help="run oracle consistency checks and print them as JSON")
    _common(p)
    return parser


def _settings(args) -> Settings:
    doc = load_document(args.config) if args.config else None
    params = dict(args.param) if args.param else None
    return resolve(
        doc, kernel=args.kernel, epsilon=args.epsilon, lam=args.lam, warmup=args.warmup,
        form=args.form, a0=args.a0, n0=args.n0, gamma=args.gamma,
        distribution=args.distribution, params=params, n_samples=args.n_samples, n_runs=args.n_runs,
        base_seed=args.base_seed, initial_points=args.initial_points, out_dir=args.out_dir,
        trace_every=args.trace_every,
    )


def _echo(settings: Settings, config=None) -> dict:
    out = {"settings": settings.to_dict(), "rng": RNG_ALGORITHM}
    if config is not None:
        out["estimator"] = config_to_dict(config)
    return out


def _warn_unregularized(settings):
    if settings.lam == 0:
        print("warning: lambda = 0 disables the regularization that keeps the iterates bounded",
              file=sys.stderr)


def _print_json(doc):
    json.dump(doc, sys.stdout, indent=2, allow_nan=False)
    sys.stdout.write("\n")


def _write_path_trace(path, trajectory, p, echo):
    with open(path, "w", newline="") as fh:
        fh.write("# config: " + json.dumps(echo, sort_keys=True) + "\n")
        w = csv.writer(fh)
        w.writerow(["n"] + [f"m_{j + 1}" for j in range(p)])
        for n, m in trajectory:
            w.writerow([n] + [repr(float(v)) for v in m])


def _parse_rows(lines):
    """Yield ``(line_number, values)`` for each data row."""
    width = None
    for lineno, line in enumerate(lines, 1):
        text = line.split("#", 1)[0].strip()
        if not text:
            continue
        fields = _SPLIT.split(text)
        try:
            values = [float(f) for f in fields]
        except ValueError:
            raise DataError(f"line {lineno}: cannot parse {line.strip()!r} as numbers", index=lineno) from None
        if not all(math.isfinite(v) for v in values):
            raise DataError(f"line {lineno}: non-finite value in {line.strip()!r}", index=lineno)
        if width is None:
            width = len(values)
        elif len(values) != width:
            raise DataError(f"line {lineno}: expected {width} values, got {len(values)}", index=lineno)
        yield lineno, values


def _finish(runner, settings, trace_path, extra):
    state = runner.state()
    if runner.seen == 0:
        raise DataError("no samples")
    if state.warmup_count < runner.config.warmup:
        raise DataError(f"only {state.warmup_count} samples; the warm-up needs {runner.config.warmup}")
    trajectory = runner.finish_trajectory()
    echo = _echo(settings, runner.config)
    if trace_path:
        _write_path_trace(trace_path, trajectory, runner.config.dim, echo)
    doc = {"mode": state.m.tolist(), "n_updates": state.n, "n_samples": runner.seen}
    doc.update(extra)
    doc["config"] = echo
    _print_json(doc)


def _feed(runner, rows, linenos):
    """Feed buffered rows, reporting failures by input line number."""
    before = runner.seen
    try:
        runner.feed(np.array(rows))
    except (DataError, DivergenceError) as exc:
        line = linenos[exc.index - before]
        raise type(exc)(f"line {line}: {exc}", index=line) from exc


def cmd_estimate(args) -> int:
    settings = _settings(args)
    _warn_unregularized(settings)
    fh = sys.stdin if args.input == "-" else open(args.input)
    runner = None
    rows, linenos = [], []
    try:
        for lineno, values in _parse_rows(fh):
            if runner is None:
                config = settings.estimator_config(len(values))
                runner = _Runner(config, init_state(config, _initial(settings, config)), settings.trace_every)
            rows.append(values)
            linenos.append(lineno)
            if len(rows) >= _READ_BLOCK:
                _feed(runner, rows, linenos)
                rows, linenos = [], []
        if rows:
            _feed(runner, rows, linenos)
    finally:
        if fh is not sys.stdin:
            fh.close()
    if runner is None:
        raise DataError("no samples")
    _finish(runner, settings, args.trace, {"source": args.input})
    return 0


def _initial(settings, config):
    if config.warmup != 0:
        return None
    if not settings.initial_points:
        raise ConfigError("warmup = 0 needs an initial point (--initial)")
    return settings.initial_points[0]


def cmd_simulate(args) -> int:
    settings = _settings(args)
    _warn_unregularized(settings)
    dist = settings.dist()
    config = settings.estimator_config(dist.dim)
    if settings.n_samples < 1:
        raise ConfigError("--samples must be positive")
    runner = _Runner(config, init_state(config, _initial(settings, config)), settings.trace_every)
    for block in sample_stream(dist, settings.base_seed, settings.n_samples):
        runner.feed(block)
    _finish(runner, settings, args.trace, {"distribution": dist.to_dict(), "seed": settings.base_seed})
    return 0


def _plan(settings, initial=False) -> ExperimentPlan:
    dist = settings.dist()
    config = settings.estimator_config(dist.dim)
    return ExperimentPlan(dist, config, settings.n_samples, settings.n_runs, settings.base_seed,
                          settings.initial_points if initial else None)


def cmd_replicate(args) -> int:
    settings = _settings(args)
    _warn_unregularized(settings)
    plan = _plan(settings)
    report = replicate(plan, n_jobs=args.jobs)
    out = Path(settings.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / "report.json"
    write_report_json(path, plan, report, {"config": _echo(settings, plan.config)})
    _print_json({"report": str(path), "mean_estimate": report.mean_estimate.tolist(),
                 "std_estimate": report.std_estimate.tolist(), "analytic_mode": report.analytic_mode.tolist(),
                 "wall_time_s": report.wall_time_s})
    return 0


def cmd_trace(args) -> int:
    settings = _settings(args)
    _warn_unregularized(settings)
    settings.warmup = 0
    if not settings.initial_points:
        raise ConfigError("trace needs at least one --initial point")
    plan = _plan(settings, initial=True)
    trajectories = trace_from_initials(plan, settings.trace_every or 1)
    out = Path(settings.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / "trace.csv"
    write_trace_csv(path, trajectories, _echo(settings, plan.config))
    _print_json({"trace": str(path), "final": {t.label: t.final.tolist() for t in trajectories}})
    return 0


def cmd_sample(args) -> int:
    settings = _settings(args)
    dist = settings.dist()
    if settings.n_samples < 1:
        raise ConfigError("--samples must be positive")
    fh = sys.stdout if args.output == "-" else open(args.output, "w")
    try:
        fh.write(f"# {dist.name} seed={settings.base_seed} rng={RNG_ALGORITHM} block={STREAM_BLOCK} "
                 + json.dumps(dist.to_dict()["params"], sort_keys=True) + "\n")
        for block in sample_stream(dist, settings.base_seed, settings.n_samples):
            fh.writelines(",".join(repr(float(v)) for v in row) + "\n" for row in block)
    finally:
        if fh is not sys.stdout:
            fh.close()
    return 0


def cmd_verify(args) -> int:
    from .verify import run_checks

    settings = _settings(args)
    dist = settings.dist()
    config = settings.estimator_config(dist.dim)
    checks = run_checks(dist, config.kernel, config.lam)
    passed = all(c["passed"] for c in checks)
    _print_json({"distribution": dist.to_dict(), "checks": checks, "passed": passed,
                 "config": _echo(settings, config)})
    return 0 if passed else EXIT_VERIFY_FAILED


COMMANDS = {
    "estimate": cmd_estimate,
    "simulate": cmd_simulate,
    "replicate": cmd_replicate,
    "trace": cmd_trace,
    "sample": cmd_sample,
    "verify": cmd_verify,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except DivergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    except OnlineModeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
