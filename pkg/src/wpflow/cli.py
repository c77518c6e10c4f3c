"""Command-line interface: ``wpflow estimate | evaluate | instability``.

Exit status: 0 success, 1 usage or input error, 2 solver nonconvergence,
3 internal invariant violation.
"""

from __future__ import annotations

import argparse
import csv
import os
import sys
from typing import Dict, List, Optional, Sequence

import numpy as np

from .analysis import components
from .downstream import PortfolioSpec
from .harness import (EvaluationConfig, ForecastTask, ParameterGrid, PortfolioTask,
                      SAAEstimator, SmoothingEstimator, SyntheticSpec, WindowEstimator,
                      WPFEstimator, compare, generate_synthetic, instability_probe,
                      rolling_evaluate)
from .metric import InputError, Metric
from .model import ObservationSeries, build_problem
from .solver import ConvergenceError, InvariantViolation, solve

DROPOUT_DATA = (6.41, 6.4, 5.89, 5.69, 5.13, 4.5695)
DROPOUT_LAMBDAS = (2.7, 3.0)


def fmt(v) -> str:
    return f"{float(v):.6g}"


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def parse_numbers(text: str) -> List[float]:
    """``"4"``, ``"1,2,5"`` or ``"start:stop:step"`` (stop inclusive)."""
    text = str(text).strip()
    if not text:
        raise InputError("empty number list")
    try:
        if ":" in text:
            parts = [float(p) for p in text.split(":")]
            if len(parts) != 3 or parts[2] <= 0 or parts[1] < parts[0]:
                raise InputError(f"bad range {text!r}; expected start:stop:step")
            n = int(np.floor((parts[1] - parts[0]) / parts[2] + 1e-9)) + 1
            return [round(parts[0] + k * parts[2], 12) for k in range(n)]
        return [float(p) for p in text.split(",") if p.strip()]
    except ValueError as exc:
        raise InputError(f"cannot parse number list {text!r}") from exc


def read_series(path: str) -> ObservationSeries:
    """CSV with a header: ``time``, optional ``period``, then feature columns."""
    if not os.path.isfile(path):
        raise InputError(f"input file {path!r} not found")
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    if not rows:
        raise InputError(f"{path}: empty file")
    header = [h.strip().lower() for h in rows[0]]
    if not header or header[0] != "time":
        raise InputError(f"{path}: first column must be 'time'")
    has_period = len(header) > 1 and header[1] == "period"
    first_feature = 2 if has_period else 1
    if len(header) <= first_feature:
        raise InputError(f"{path}: no feature columns")
    body = rows[1:]
    if not body:
        raise InputError(f"{path}: no data rows")
    times, periods, values = [], [], []
    for k, r in enumerate(body, start=2):
        if len(r) != len(header):
            raise InputError(f"{path}:{k}: expected {len(header)} fields, got {len(r)}")
        try:
            times.append(int(r[0]))
            if has_period:
                periods.append(int(r[1]))
            values.append([float(c) for c in r[first_feature:]])
        except ValueError as exc:
            raise InputError(f"{path}:{k}: {exc}") from exc
    if any(b <= a for a, b in zip(times, times[1:])):
        raise InputError(f"{path}: time column must be strictly increasing")
    vals = np.asarray(values, dtype=float)
    if not np.all(np.isfinite(vals)):
        raise InputError(f"{path}: non-finite feature value")
    series = ObservationSeries.from_values(vals, periods if has_period else None)
    return series


def read_times(path: str) -> List[int]:
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    return [int(r[0]) for r in rows[1:]]


def write_csv(path: str, header: Sequence[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([c if isinstance(c, str) else fmt(c) if isinstance(c, float) else c for c in r])


def _metric(args) -> Metric:
    return Metric.parse(args.metric, args.delta0)


def _summary_lines(sol, lam: float, metric: Metric) -> List[str]:
    comps = components(sol)
    nodes = ",".join("[" + ",".join(str(i) for i in c.nodes) + "]" for c in comps)
    masses = ",".join(fmt(c.mass) for c in comps)
    return [
        f"metric={metric.label}",
        f"lambda={fmt(lam)}",
        f"T={sol.problem.T}",
        f"objective={fmt(sol.objective)}",
        f"mu_path={fmt(sol.mu_path)}",
        f"gap={fmt(sol.gap)}",
        f"iterations={sol.iterations}",
        f"components=[{nodes}]",
        f"component_mass=[{masses}]",
        f"support=[{','.join(str(i) for i in sol.terminal.support())}]",
    ]


def cmd_estimate(args) -> int:
    series = read_series(args.input)
    times = read_times(args.input)
    metric = _metric(args)
    lams = parse_numbers(args.lam)
    os.makedirs(args.out, exist_ok=True)
    sweep = []
    for lam in lams:
        sol = solve(build_problem(series, metric, lam, grouped=args.grouped))
        suffix = "" if len(lams) == 1 else f"_lambda_{fmt(lam)}"
        write_csv(os.path.join(args.out, f"weights{suffix}.csv"), ["index", "time", "weight"],
                  [(i + 1, times[i], float(w)) for i, w in enumerate(sol.terminal.weights)])
        write_csv(os.path.join(args.out, f"node_mass{suffix}.csv"), ["index", "time", "node_mass"],
                  [(i + 1, times[i], float(m)) for i, m in enumerate(sol.node_mass)])
        lines = _summary_lines(sol, lam, metric)
        with open(os.path.join(args.out, f"summary{suffix}.txt"), "w") as fh:
            fh.write("\n".join(lines) + "\n")
        sweep.append((lam, sol.objective, sol.mu_path, sol.gap, len(sol.terminal.support()),
                      len(components(sol))))
        if len(lams) == 1:
            print("\n".join(lines))
    if len(lams) > 1:
        write_csv(os.path.join(args.out, "lambda_sweep.csv"),
                  ["lambda", "objective", "mu_path", "gap", "support", "components"],
                  [(float(a), float(b), float(c), float(d), e, f) for a, b, c, d, e, f in sweep])
        print(f"wrote {len(lams)} weight files and lambda_sweep.csv to {args.out}")
    return 0


def _evaluation_data(args, task_name: str) -> ObservationSeries:
    if args.input:
        series = read_series(args.input)
    else:
        cumulative = task_name == "forecast"
        spec = SyntheticSpec(length=args.length, dim=args.dim, cumulative=cumulative)
        series = generate_synthetic(spec, args.seed)
        if cumulative:
            series = ObservationSeries(np.exp(series.points), series.periods)
    if task_name == "forecast":
        if np.any(series.points <= 0):
            raise InputError("forecasting works on log prices; prices must be positive")
        series = ObservationSeries(np.log(series.points), series.periods)
    return series


def cmd_evaluate(args) -> int:
    if args.task == "none":
        raise InputError("evaluate needs --task forecast or --task portfolio")
    series = _evaluation_data(args, args.task)
    if args.task == "forecast":
        task = ForecastTask()
        grid = ParameterGrid.forecasting()
    else:
        task = PortfolioTask(PortfolioSpec(args.rho, args.beta))
        grid = ParameterGrid.portfolio()
    if args.lam:
        grid = ParameterGrid(grid.window, grid.decay, tuple(sorted(parse_numbers(args.lam))))
    config = EvaluationConfig(train_fraction=args.train_frac, warmup=args.warmup,
                              tuning_window=args.tuning_window, grid=grid)
    methods = [m.strip().lower() for m in args.methods.split(",") if m.strip()]
    estimators = []
    for m in methods:
        if m == "saa":
            estimators.append(SAAEstimator())
        elif m == "window":
            estimators.append(WindowEstimator(grid.window))
        elif m == "smoothing":
            estimators.append(SmoothingEstimator(grid.decay))
        elif m == "wpf":
            for name in args.metric.split(","):
                estimators.append(WPFEstimator(grid.penalty, Metric.parse(name.strip(), args.delta0),
                                               grouped=args.grouped))
        else:
            raise InputError(f"unknown method {m!r}")
    if not estimators:
        raise InputError("no methods selected")

    os.makedirs(args.out, exist_ok=True)
    traces = []
    for est in estimators:
        tr = rolling_evaluate(series, est, task, config)
        traces.append(tr)
        write_csv(os.path.join(args.out, f"trace_{tr.method}.csv"), ["decision_period", "phase", "parameter", "cost"],
                  [(int(t), ph, "" if p is None else fmt(p), float(c))
                   for t, ph, p, c in zip(tr.times, tr.phases, tr.params, tr.costs)])
        if isinstance(est, WPFEstimator):
            mask = tr.test_mask
            write_csv(os.path.join(args.out, f"penalty_costs_{tr.method}.csv"), ["lambda", "test_cost"],
                      [(float(lam), task.aggregate(tr.candidate_costs[k, mask]))
                       for k, lam in enumerate(tr.grid)])
    rows = compare(traces, task)
    write_csv(os.path.join(args.out, "comparison.csv"), ["method", "test_cost", "difference", "std_error"],
              [(r.method, r.cost, r.difference, r.std_error) for r in rows])
    width = max(len(r.method) for r in rows)
    lines = [f"{'Method':<{width}}  {'Avg. testing cost':>17}  {'Diff. to SAA':>12}  {'Std. error':>10}"]
    for r in rows:
        lines.append(f"{r.method:<{width}}  {fmt(r.cost):>17}  {fmt(r.difference):>12}  {fmt(r.std_error):>10}")
    text = "\n".join(lines) + "\n"
    with open(os.path.join(args.out, "comparison.txt"), "w") as fh:
        fh.write(text)
    print(text, end="")
    return 0


def cmd_instability(args) -> int:
    Ts = [int(t) for t in parse_numbers(args.T)]
    if any(t < 6 for t in Ts):
        raise InputError("sequence lengths must be at least 6")
    lam = float(parse_numbers(args.lam)[0]) if args.lam else 4.0
    os.makedirs(args.out, exist_ok=True)
    probe = instability_probe(Ts, lam)
    write_csv(os.path.join(args.out, "instability.csv"), ["T", "weight_obs6"],
              [(t, probe[t]) for t in Ts])
    for t in Ts:
        print(f"T={t} weight_obs6={fmt(probe[t])}")
    if args.dropout:
        series = ObservationSeries.from_values(DROPOUT_DATA)
        metric = Metric("l2")
        rows, supports = [], {}
        for lam_d in DROPOUT_LAMBDAS:
            sol = solve(build_problem(series, metric, lam_d))
            supports[lam_d] = set(sol.terminal.support(1e-6))
            for i, w in enumerate(sol.terminal.weights):
                rows.append((float(lam_d), i + 1, float(DROPOUT_DATA[i]), float(w)))
        write_csv(os.path.join(args.out, "dropout.csv"), ["lambda", "index", "value", "weight"], rows)
        lo, hi = DROPOUT_LAMBDAS
        dropped = sorted(supports[lo] - supports[hi])
        print(f"support at lambda={fmt(lo)}: {sorted(supports[lo])}")
        print(f"support at lambda={fmt(hi)}: {sorted(supports[hi])}")
        print(f"dropped=[{','.join(str(i) for i in dropped)}]")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="wpflow", description=__doc__.splitlines()[0])
    parser.add_argument("--config", help="flat key=value file; flags given on the command line win")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    def common(p):
        p.add_argument("--config", default=argparse.SUPPRESS, help=argparse.SUPPRESS)
        p.add_argument("--metric", default="l2", help="l1, l2 or linf (comma list for evaluate)")
        p.add_argument("--delta0", type=float, default=0.0, help="fixed cost added to every move")
        p.add_argument("--lambda", dest="lam", default=None, help="value, list a,b,c or range start:stop:step")
        p.add_argument("--grouped", action="store_true", help="forbid flow within a period")
        p.add_argument("--out", default=".", help="output directory")

    est = sub.add_parser("estimate", help="solve for the terminal distribution")
    common(est)
    est.add_argument("--input", required=True)
    est.set_defaults(func=cmd_estimate, lam="4")

    ev = sub.add_parser("evaluate", help="rolling out-of-sample comparison")
    common(ev)
    ev.add_argument("--input", help="CSV of prices (forecast) or returns (portfolio)")
    ev.add_argument("--task", choices=("forecast", "portfolio", "none"), default="forecast")
    ev.add_argument("--methods", default="saa,window,smoothing,wpf")
    ev.add_argument("--rho", type=float, default=0.9)
    ev.add_argument("--beta", type=float, default=0.05)
    ev.add_argument("--train-frac", dest="train_frac", type=float, default=0.7)
    ev.add_argument("--warmup", type=int, default=24)
    ev.add_argument("--tuning-window", dest="tuning_window", type=int, default=24)
    ev.add_argument("--seed", type=int, default=0, help="seed for the synthetic series")
    ev.add_argument("--length", type=int, default=168, help="synthetic series length")
    ev.add_argument("--dim", type=int, default=3, help="synthetic series dimension")
    ev.set_defaults(func=cmd_evaluate, metric="l1,l2,linf")

    ap = sub.add_parser("instability", help="weight of observation 6 on the switching sequence")
    common(ap)
    ap.add_argument("--T", default="9,16,31", help="sequence lengths")
    ap.add_argument("--dropout", action="store_true", help="also run the two-penalty dropout check")
    ap.set_defaults(func=cmd_instability)
    return parser


def read_config(path: str) -> Dict[str, str]:
    if not os.path.isfile(path):
        raise InputError(f"config file {path!r} not found")
    out = {}
    with open(path) as fh:
        for k, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise InputError(f"{path}:{k}: expected key=value")
            key, val = (s.strip() for s in line.split("=", 1))
            out[key.replace("-", "_")] = val
    return out


def _apply_config(parser: argparse.ArgumentParser, argv: Sequence[str]) -> argparse.Namespace:
    # look for --config without running the subcommand parser, which would enforce required flags
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if not known.config:
        return parser.parse_args(argv)
    cfg = read_config(known.config)
    choices = parser._subparsers._group_actions[0].choices
    command = next((a for a in argv if a in choices), None)
    if command is None:
        return parser.parse_args(argv)
    sub = choices[command]
    actions = {a.dest: a for a in sub._actions}
    aliases = {"lambda": "lam", "train_frac": "train_frac", "tuning_window": "tuning_window"}
    defaults = {}
    for key, val in cfg.items():
        dest = aliases.get(key, key)
        act = actions.get(dest)
        if act is None:
            raise InputError(f"unknown config key {key!r}")
        if isinstance(act, argparse._StoreTrueAction):
            defaults[dest] = val.lower() in ("1", "true", "yes", "on")
        else:
            defaults[dest] = act.type(val) if act.type else val
    sub.set_defaults(**defaults)
    for act in sub._actions:
        if act.dest in defaults:
            act.required = False
    return parser.parse_args(argv)


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = _apply_config(parser, argv)
        if not getattr(args, "command", None):
            parser.print_usage(sys.stderr)
            return 1
        return args.func(args)
    except ConvergenceError as exc:
        print(f"wpflow: solver did not converge: {exc}", file=sys.stderr)
        return 2
    except InvariantViolation as exc:
        print(f"wpflow: internal invariant violated: {exc}", file=sys.stderr)
        return 3
    except (InputError, ValueError, OSError) as exc:
        print(f"wpflow: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
