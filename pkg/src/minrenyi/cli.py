"""Command-line experiment runner.

Usage:
    minrenyi critical
    minrenyi bound --kraus 2 --p 0.5
    minrenyi scan --kraus 3
    minrenyi sample-channel --kraus 4 --dim 8 --seed 1
    minrenyi minimize --channel runs/<id>/channel.json --p 0.5
    minrenyi violation-search --kraus 4 --dim 8 --p 0.15 --channels 10
    minrenyi concentration --kraus 3 --dim 64 128 256 --trials 100
    minrenyi near-event --kraus 4 --dim 256 --p 0.5 --y0 0.5 --trials 200

Every run writes OUT/<run_id>/{record.json,rows.jsonl,export.csv}. The
run id hashes the command, its parameters and the seed. ``--config FILE``
supplies defaults from a JSON object; explicit flags win.

Exit codes: 0 success, 2 usage error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import bounds
from .channels import RandomUnitaryChannel, complex_conjugate, load_channel, sample_channel
from .entropy_min import (
    PRODUCT_DIM_LIMIT,
    MinimizationConfig,
    minimize_output_entropy,
    minimize_product_entropy,
    product_output_entropy,
)
from ._parallel import ordered_map
from .montecarlo import concentration_experiment, near_event_experiment
from .quantum import RngStream, complex_to_json, maximally_entangled
from .records import RunRecord, write_run

EXIT_USAGE = 2
EXIT_NUMERICAL = 3

DEFAULT_P_GRID = [round(0.05 * k, 2) for k in range(1, 20)]
NON_PARAMETERS = {"command", "out", "config", "handler", "seed"}


class UsageError(Exception):
    pass


def _require(cond, flag, message):
    if not cond:
        raise UsageError(f"{flag}: {message}")


def _check_order_flag(p):
    _require(0.0 < p < 1.0, "--p", f"must lie in (0, 1), got {p}")


def _cfg(args) -> MinimizationConfig:
    _require(args.starts >= 1, "--starts", "must be >= 1")
    _require(args.max_iters >= 1, "--max-iters", "must be >= 1")
    return MinimizationConfig(
        starts=args.starts,
        max_iters=args.max_iters,
        include_special_starts=not args.no_special_starts,
    )


def cmd_critical(args):
    c = bounds.find_critical()
    print(f"y0 = {c.y0:.10f}\nh0 = {c.h0:.10f}\np0 = {c.p0:.10f}")
    metrics = {"y0": c.y0, "h0": c.h0, "p0": c.p0}
    return metrics, [(0, metrics)], [metrics], {}


def cmd_bound(args):
    _require(args.kraus >= 1, "--kraus", "must be >= 1")
    _check_order_flag(args.p)
    metrics = {"bound": bounds.entangled_input_bound(args.kraus, args.p)}
    if args.kraus >= 2:
        metrics["delta_s"] = bounds.entropy_gap_threshold(args.kraus, args.p)
    for k, v in metrics.items():
        print(f"{k} = {v:.12g}")
    return metrics, [(0, metrics)], [metrics], {}


def cmd_scan(args):
    _require(args.kraus >= 1, "--kraus", "must be >= 1")
    for p in args.p_grid:
        _check_order_flag(p)
    crit = bounds.find_critical()
    rows, table = [], []
    for i, p in enumerate(args.p_grid):
        m = {
            "p": p,
            "bound": bounds.entangled_input_bound(args.kraus, p),
            "in_window": float(bounds.in_violation_window(p, crit)),
        }
        if args.kraus >= 2:
            m["delta_s"] = bounds.entropy_gap_threshold(args.kraus, p)
        rows.append((i, m))
        table.append(m)
    print(f"scanned {len(table)} orders at D = {args.kraus}")
    return {"points": float(len(table))}, rows, table, {}


def cmd_sample_channel(args):
    _require(args.kraus >= 1, "--kraus", "must be >= 1")
    _require(args.dim >= 1, "--dim", "must be >= 1")
    # same stream as minimize --kraus/--dim, so both see one channel per seed
    ch = sample_channel(args.kraus, args.dim, RngStream(args.seed).child(0))
    metrics = {"N": float(ch.N), "D": float(ch.D)}
    rows = [(i, {"weight": float(w)}) for i, w in enumerate(ch.weights)]
    return metrics, rows, None, {"channel.json": ch.to_dict()}


def _channel_from_args(args, stream) -> RandomUnitaryChannel:
    if args.channel:
        try:
            return load_channel(args.channel)
        except (OSError, ValueError, KeyError) as exc:
            raise UsageError(f"--channel: cannot load {args.channel}: {exc}") from exc
    _require(args.kraus is not None and args.dim is not None, "--kraus/--dim",
             "needed when no --channel file is given")
    _require(args.kraus >= 1, "--kraus", "must be >= 1")
    _require(args.dim >= 1, "--dim", "must be >= 1")
    return sample_channel(args.kraus, args.dim, stream)


def cmd_minimize(args):
    _require(args.p > 0, "--p", "must be positive")
    root = RngStream(args.seed)
    ch = _channel_from_args(args, root.child(0))
    est = minimize_output_entropy(ch, args.p, _cfg(args), root.child(1))
    print(f"H_min <= {est.value:.12g} (start {est.start_index}, converged={est.converged})")
    metrics = {
        "value": est.value,
        "start_index": float(est.start_index),
        "iterations": float(est.iterations),
        "converged": float(est.converged),
    }
    rows = [(k, {"value": float(v)}) for k, v in enumerate(est.all_start_values)]
    return metrics, rows, [m for _, m in rows], {"witness.json": complex_to_json(est.witness)}


def cmd_violation_search(args):
    _require(args.kraus >= 1, "--kraus", "must be >= 1")
    _require(1 <= args.dim <= PRODUCT_DIM_LIMIT, "--dim", f"must lie in [1, {PRODUCT_DIM_LIMIT}]")
    _require(args.channels >= 1, "--channels", "must be >= 1")
    _check_order_flag(args.p)
    cfg = _cfg(args)
    root = RngStream(args.seed)

    def one(i):
        s = root.child(i)
        ch = sample_channel(args.kraus, args.dim, s.child(0))
        h1 = minimize_output_entropy(ch, args.p, cfg, s.child(1))
        h2 = minimize_product_entropy(ch, args.p, cfg, s.child(2), single=h1)
        h_phi = product_output_entropy(ch, complex_conjugate(ch), maximally_entangled(ch.N), args.p)
        return {
            "h1": h1.value,
            "h_phi": h_phi,
            "h2": h2.value,
            "gap": 2.0 * h1.value - h2.value,
            "mixture_bound": bounds.mixture_bound(ch.weights, args.p),
            "bound": bounds.entangled_input_bound(args.kraus, args.p),
        }

    results = ordered_map(one, range(args.channels))
    gaps = np.array([r["gap"] for r in results])
    summary = {
        "min_gap": float(gaps.min()),
        "median_gap": float(np.median(gaps)),
        "max_gap": float(gaps.max()),
        "positive_gaps": float(np.sum(gaps > 0)),
    }
    print(f"{'channel':>7} {'h1':>12} {'h_phi':>12} {'h2':>12} {'gap':>12}")
    for i, r in enumerate(results):
        print(f"{i:>7} {r['h1']:12.8f} {r['h_phi']:12.8f} {r['h2']:12.8f} {r['gap']:12.4e}")
    print(f"gap min {summary['min_gap']:.4e}  median {summary['median_gap']:.4e}"
          "  (a positive gap is evidence only: h1 is an upper bound)")
    rows = list(enumerate(results))
    table = [dict(channel=i, **r) for i, r in rows]
    return summary, rows, table, {}


def cmd_concentration(args):
    _require(args.trials >= 1, "--trials", "must be >= 1")
    for n in args.dim:
        _require(n > args.kraus, "--dim", f"every N must exceed D = {args.kraus}")
    reports = concentration_experiment(args.kraus, args.dim, args.trials, RngStream(args.seed))
    metrics, rows, table = {}, [], []
    for j, rep in enumerate(reports):
        metrics[f"median_N{rep.N}"] = rep.median_deviation
        metrics[f"scaled_median_N{rep.N}"] = rep.scaled_median
        table.append({"N": rep.N, "median_deviation": rep.median_deviation,
                      "scaled_median": rep.scaled_median})
        print(f"N = {rep.N:5d}  median dev {rep.median_deviation:.6f}  scaled {rep.scaled_median:.4f}")
        for t, dev in enumerate(rep.deviations):
            rows.append((j * args.trials + t, {"N": float(rep.N), "deviation": float(dev)}))
    return metrics, rows, table, {"report.json": [r.to_dict() for r in reports]}


def cmd_near_event(args):
    _require(args.trials >= 1, "--trials", "must be >= 1")
    _require(0.0 <= args.y0 <= 1.0, "--y0", "must lie in [0, 1]")
    _require(args.p > 0, "--p", "must be positive")
    root = RngStream(args.seed)
    ch = _channel_from_args(args, root.child(0))
    est = minimize_output_entropy(ch, args.p, _cfg(args), root.child(1))
    rep = near_event_experiment(ch, est.witness, args.y0, args.trials, root.child(2))
    metrics = {
        "h_min": est.value,
        "fraction_above_y0": rep.fraction_above_y0,
        "median_residual": rep.median_residual,
    }
    print(f"fraction with y >= {args.y0}: {rep.fraction_above_y0:.4f}; "
          f"median residual {rep.median_residual:.4e}")
    rows = [
        (t, {"y": float(y), "residual": float(r), "y_ls": float(l)})
        for t, (y, r, l) in enumerate(zip(rep.fitted_y, rep.residuals, rep.ls_fitted_y))
    ]
    return metrics, rows, [m for _, m in rows], {"report.json": rep.to_dict()}


def _common(sub):
    sub.add_argument("--seed", type=int, default=0)
    sub.add_argument("--out", default="runs", help="results directory (default: runs)")
    sub.add_argument("--config", help="JSON file with flag defaults")


def _minimizer_flags(sub, starts=32):
    sub.add_argument("--starts", type=int, default=starts)
    sub.add_argument("--max-iters", type=int, default=2000)
    sub.add_argument(
        "--no-special-starts",
        action="store_true",
        help="skip the N basis-state starts of the single-channel search",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="minrenyi", description=__doc__.split("\n")[0])
    subs = parser.add_subparsers(dest="command", required=True)

    s = subs.add_parser("critical", help="critical constants y0, h0, p0")
    s.set_defaults(handler=cmd_critical)

    s = subs.add_parser("bound", help="entangled-input bound and entropy gap threshold")
    s.add_argument("--kraus", type=int, required=True)
    s.add_argument("--p", type=float, required=True)
    s.set_defaults(handler=cmd_bound)

    s = subs.add_parser("scan", help="bound over a grid of orders")
    s.add_argument("--kraus", type=int, required=True)
    s.add_argument("--p-grid", type=float, nargs="+", default=DEFAULT_P_GRID)
    s.set_defaults(handler=cmd_scan)

    s = subs.add_parser("sample-channel", help="sample a random unitary channel")
    s.add_argument("--kraus", type=int, required=True)
    s.add_argument("--dim", type=int, required=True)
    s.set_defaults(handler=cmd_sample_channel)

    s = subs.add_parser("minimize", help="multistart minimum output entropy")
    s.add_argument("--channel", help="channel JSON file")
    s.add_argument("--kraus", type=int)
    s.add_argument("--dim", type=int)
    s.add_argument("--p", type=float, required=True)
    _minimizer_flags(s)
    s.set_defaults(handler=cmd_minimize)

    s = subs.add_parser("violation-search", help="compare 2 H(E) with H(E x conj E)")
    s.add_argument("--kraus", type=int, required=True)
    s.add_argument("--dim", type=int, required=True)
    s.add_argument("--p", type=float, required=True)
    s.add_argument("--channels", type=int, default=10)
    _minimizer_flags(s, starts=4)
    s.set_defaults(handler=cmd_violation_search)

    s = subs.add_parser("concentration", help="eigenvalue concentration of conjugate outputs")
    s.add_argument("--kraus", type=int, required=True)
    s.add_argument("--dim", type=int, nargs="+", required=True)
    s.add_argument("--trials", type=int, default=100)
    s.set_defaults(handler=cmd_concentration)

    s = subs.add_parser("near-event", help="interpolation fits around the minimizing state")
    s.add_argument("--channel", help="channel JSON file")
    s.add_argument("--kraus", type=int)
    s.add_argument("--dim", type=int)
    s.add_argument("--p", type=float, required=True)
    s.add_argument("--y0", type=float, default=0.5)
    s.add_argument("--trials", type=int, default=200)
    _minimizer_flags(s, starts=8)
    s.set_defaults(handler=cmd_near_event)

    for sub in subs.choices.values():
        _common(sub)
    return parser


def _apply_config(parser, argv):
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if not known.config:
        return
    try:
        with open(known.config) as fh:
            data = json.load(fh)
    except (OSError, ValueError) as exc:
        parser.error(f"--config: cannot read {known.config}: {exc}")
    if not isinstance(data, dict):
        parser.error("--config: file must hold a JSON object")
    data = {k.replace("-", "_"): v for k, v in data.items()}
    for sub in parser._subparsers._group_actions[0].choices.values():
        for action in sub._actions:
            if action.dest in data:
                action.required = False
        dests = {a.dest for a in sub._actions}
        sub.set_defaults(**{k: v for k, v in data.items() if k in dests})


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    _apply_config(parser, argv)
    args = parser.parse_args(argv)
    parameters = {
        k: v for k, v in sorted(vars(args).items()) if k not in NON_PARAMETERS and v is not None
    }
    try:
        metrics, rows, table, extra = args.handler(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"minrenyi {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ArithmeticError, ValueError, np.linalg.LinAlgError) as exc:
        print(f"minrenyi {args.command}: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    record = RunRecord(args.command, parameters, args.seed, metrics)
    run_dir = write_run(Path(args.out), record, rows, table, extra)
    print(f"run {record.run_id} -> {run_dir}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
