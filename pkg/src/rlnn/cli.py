"""Command-line entry point: ``rlnn price | bounds | hedge | export-portfolio | selftest``."""
from __future__ import annotations

import argparse
import configparser
import logging
import sys
from pathlib import Path

import numpy as np

from . import bounds, hedge, presets, selftest
from .market import ExerciseSchedule, GbmModel
from .network import InputSpace, TrainConfig
from .payoff import PayoffKind, PayoffSpec
from .pricer import RlnnResult, rlnn_backward

log = logging.getLogger("rlnn")

# per-key converters for the [experiment] section of a config file
_EXPERIMENT_KEYS = {
    "name": str, "set": str, "s0": float, "dim": int, "barrier": float, "strike": float, "hidden": int,
    "n_train": int, "n_eval": int, "seeds": str, "out": str, "format": str,
    "save_result": str, "input_space": str, "patience": int, "learning_rate": float,
    "batch_fraction": float, "max_epochs": int,
}


def parse_seeds(text):
    """``"7"`` -> [7]; ``"0..30"`` -> 0, 1, ..., 29 (end exclusive); ``"1,4,9"`` -> list."""
    text = str(text).strip()
    if ".." in text:
        lo, hi = text.split("..", 1)
        lo, hi = int(lo), int(hi)
        if hi <= lo:
            raise argparse.ArgumentTypeError(f"empty seed range {text!r}")
        return list(range(lo, hi))
    return [int(v) for v in text.split(",") if v.strip()]


def _floats(text):
    return [float(v) for v in str(text).replace(";", ",").split(",") if v.strip()]


def _model_from_section(sec):
    corr = None
    if "corr" in sec:
        corr = [_floats(row) for row in sec["corr"].split(";") if row.strip()]
    return GbmModel(_floats(sec["spot"]), float(sec["rate"]), _floats(sec["vol"]),
                    _floats(sec.get("dividend", "0")) if "dividend" in sec else None, corr)


def _spec_from_section(sec):
    weights = _floats(sec["weights"]) if "weights" in sec else None
    barrier = float(sec["barrier"]) if "barrier" in sec else None
    return PayoffSpec(PayoffKind(sec["kind"]), float(sec["strike"]), weights, barrier)


def load_config(path):
    """Read an INI file; returns ``(experiment_defaults, custom_experiment_or_None)``."""
    cp = configparser.ConfigParser()
    if not cp.read(path):
        raise FileNotFoundError(path)
    values = {}
    if cp.has_section("experiment"):
        for key, raw in cp.items("experiment"):
            key = key.replace("-", "_")
            if key not in _EXPERIMENT_KEYS:
                raise ValueError(f"unknown key {key!r} in [experiment]")
            values[key] = _EXPERIMENT_KEYS[key](raw)
    custom = None
    if cp.has_section("model"):
        for sec in ("payoff", "schedule"):
            if not cp.has_section(sec):
                raise ValueError(f"[model] needs a [{sec}] section")
        sched = cp["schedule"]
        custom = presets.Experiment(
            values.get("name", "custom"),
            _model_from_section(cp["model"]),
            ExerciseSchedule.uniform(float(sched["maturity"]), int(sched["dates"])),
            _spec_from_section(cp["payoff"]),
            int(values.get("hidden", 32)),
        )
    return values, custom


def _merged(args, parser):
    """Command-line flags override config values, which override defaults."""
    conf, custom = ({}, None)
    if getattr(args, "config", None):
        conf, custom = load_config(args.config)
    merged = {}
    for key in _EXPERIMENT_KEYS:
        flag = getattr(args, key, None)
        merged[key] = flag if flag is not None else conf.get(key, parser.get_default(key))
    return merged, custom


def _experiment(opts, custom):
    if custom is not None:
        ex = custom
        if opts["s0"] is not None:
            ex = presets.Experiment(ex.name, ex.model.with_spot(np.full(ex.model.dim, opts["s0"])),
                                    ex.schedule, ex.spec, ex.hidden)
    else:
        if not opts["set"]:
            raise SystemExit("error: give --set or a config file with a [model] section")
        kw = {k: opts[k] for k in ("s0", "dim", "barrier", "strike") if opts[k] is not None}
        try:
            ex = presets.preset(opts["set"], **kw)
        except TypeError as exc:
            raise SystemExit(f"error: {exc}") from None
    if opts["hidden"] is not None:
        ex = presets.Experiment(ex.name, ex.model, ex.schedule, ex.spec, opts["hidden"])
    return ex


def _train_config(opts):
    kw = {k: opts[k] for k in ("patience", "learning_rate", "batch_fraction", "max_epochs")
          if opts[k] is not None}
    return TrainConfig(**kw)


def _write(text, out):
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _summary_rows(rows):
    summary = {}
    for side in ("mean", "se"):
        row = {k: ("" if isinstance(v, float) else v) for k, v in rows[0].items()}
        row["S0"], row["seed"] = rows[0]["S0"], side
        summary[side] = row
    for key in ("direct", "lower", "lower_se", "upper", "upper_se"):
        mean, se = bounds.cross_run_summary([r[key] for r in rows])
        summary["mean"][key] = mean
        summary["se"][key] = se
    return [summary["mean"], summary["se"]]


def cmd_price(args, parser):
    opts, custom = _merged(args, parser)
    ex = _experiment(opts, custom)
    seeds = parse_seeds(opts["seeds"])
    cfg = _train_config(opts)
    rows = []
    for seed in seeds:
        res = rlnn_backward(ex.model, ex.schedule, ex.spec, opts["n_train"], ex.hidden, cfg,
                            seed=seed, input_space=InputSpace(opts["input_space"]))
        rep = bounds.evaluate_bounds(res, opts["n_eval"], seed)
        rows.append(rep.row(ex.name, float(ex.model.spot[0]), ex.hidden, seed))
        log.info("seed %d: direct %.6g lower %.6g upper %.6g", seed, rep.direct, rep.lower, rep.upper)
        if opts["save_result"]:
            target = Path(opts["save_result"])
            target.mkdir(parents=True, exist_ok=True)
            (target / f"{ex.name}-seed{seed}.json").write_text(res.to_json())
    summary = _summary_rows(rows) if len(rows) > 1 else []
    if opts["format"] == "json":
        doc = {"rows": rows}
        if summary:
            doc["summary"] = {"mean": summary[0], "se": summary[1]}
        text = bounds.rows_to_json(doc) + "\n"
    else:
        text = bounds.rows_to_csv(rows + summary)
    _write(text, opts["out"])
    return 0


def _load_result(path):
    return RlnnResult.from_json(Path(path).read_text())


def cmd_bounds(args, parser):
    res = _load_result(args.result)
    rep = bounds.evaluate_bounds(res, args.n_eval, args.seed)
    row = rep.row(args.name, float(res.model.spot[0]), res.hidden, args.seed)
    text = bounds.rows_to_json([row]) + "\n" if args.format == "json" else bounds.rows_to_csv([row])
    _write(text, args.out)
    return 0


def cmd_export_portfolio(args, parser):
    res = _load_result(args.result)
    if args.date not in res.nets:
        raise SystemExit(f"error: no network for date {args.date}; have {sorted(res.nets)}")
    port = hedge.extract_portfolio(res.nets[args.date], float(res.schedule.times[args.date]),
                                   res.scale)
    _write(hedge.portfolio_to_csv(port), args.out)
    return 0


def cmd_hedge(args, parser):
    entries = {}
    counts = [int(c) for c in _floats(args.counts)] if args.counts else None
    if args.experiment == "european":
        columns = _floats(args.columns) if args.columns else [0.5, 1.0, 1.5]
        counts = counts or [10, 25, 50]
        horizon = 1.0 / 12.0
        n_reb = args.rebalances or 25
        for col in columns:
            ex = presets.set4(strike=col)
            target = hedge.EuropeanTarget(ex.spec.strike, ex.schedule.maturity)
            for p in counts:
                net, scale = hedge.train_european_hedge_net(
                    ex.model, ex.spec.strike, ex.schedule.maturity, horizon, p, args.n_train,
                    seed=args.seed)
                port = hedge.extract_portfolio(net, horizon, scale)
                entries[("Static", p, col)] = hedge.static_backtest(
                    target, port, horizon, ex.model, args.n_paths, args.seed + 1)
            entries[("Dynamic", "NA", col)] = hedge.delta_backtest(
                target, horizon, n_reb, ex.model, args.n_paths, args.seed + 1)
    else:
        columns = _floats(args.columns) if args.columns else [0.91, 0.93, 0.95, 0.97]
        counts = counts or [5, 10, 20]
        n_reb = args.rebalances or 12
        target = None
        for col in columns:
            for p in counts:
                ex = presets.set5(barrier=col, hidden=p)
                res = rlnn_backward(ex.model, ex.schedule, ex.spec, args.n_train, p,
                                    seed=args.seed)
                target = hedge.RlnnTarget(res)
                horizon = target.first_date
                port = hedge.extract_portfolio(res.nets[1], horizon, res.scale)
                entries[("Static", p, col)] = hedge.static_backtest(
                    target, port, horizon, ex.model, args.n_paths, args.seed + 1)
            # the dynamic hedge uses the value function of the largest network
            entries[("Dynamic", "NA", col)] = hedge.delta_backtest(
                target, target.first_date, n_reb, ex.model, args.n_paths, args.seed + 1)
    _write(hedge.stats_table_csv(entries, columns), args.out)
    return 0


def cmd_selftest(args, parser):
    return 1 if selftest.run() else 0


def build_parser():
    parser = argparse.ArgumentParser(prog="rlnn", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("price", help="train networks and report direct, lower and upper prices")
    p.add_argument("--config", help="INI file with [experiment] (and optionally [model], "
                                    "[payoff], [schedule]) sections")
    p.add_argument("--set", choices=sorted(presets.PRESETS))
    p.add_argument("--s0", type=float)
    p.add_argument("--dim", type=int, help="number of assets (set3)")
    p.add_argument("--barrier", type=float, help="barrier level (set5)")
    p.add_argument("--strike", type=float, help="strike (set4)")
    p.add_argument("--hidden", type=int, help="hidden units p")
    p.add_argument("--n-train", dest="n_train", type=int)
    p.add_argument("--n-eval", dest="n_eval", type=int)
    p.add_argument("--seeds", help="single seed, list a,b,c or range a..b (end exclusive)")
    p.add_argument("--input-space", dest="input_space", choices=[s.value for s in InputSpace])
    p.add_argument("--patience", type=int)
    p.add_argument("--learning-rate", dest="learning_rate", type=float)
    p.add_argument("--batch-fraction", dest="batch_fraction", type=float)
    p.add_argument("--max-epochs", dest="max_epochs", type=int)
    p.add_argument("--save-result", dest="save_result", help="directory for per-seed result JSON")
    p.add_argument("--out")
    p.add_argument("--format", choices=["csv", "json"])
    p.set_defaults(func=cmd_price, n_train=None, n_eval=None, seeds=None, format=None,
                   input_space=None)

    b = sub.add_parser("bounds", help="re-evaluate bounds of a saved result on fresh paths")
    b.add_argument("--result", required=True)
    b.add_argument("--n-eval", dest="n_eval", type=int, default=200000)
    b.add_argument("--seed", type=int, default=1)
    b.add_argument("--name", default="")
    b.add_argument("--out")
    b.add_argument("--format", choices=["csv", "json"], default="csv")
    b.set_defaults(func=cmd_bounds)

    e = sub.add_parser("export-portfolio", help="write the hedge portfolio for one date")
    e.add_argument("--result", required=True)
    e.add_argument("--date", type=int, default=1, help="monitoring date index m >= 1")
    e.add_argument("--out")
    e.set_defaults(func=cmd_export_portfolio)

    h = sub.add_parser("hedge", help="static vs delta hedge backtests")
    h.add_argument("--experiment", choices=["european", "barrier"], default="european")
    h.add_argument("--counts", help="option counts (hidden units), comma separated")
    h.add_argument("--columns", help="moneyness K/S values or barrier levels")
    h.add_argument("--rebalances", type=int)
    h.add_argument("--n-paths", dest="n_paths", type=int, default=50000)
    h.add_argument("--n-train", dest="n_train", type=int, default=50000)
    h.add_argument("--seed", type=int, default=0)
    h.add_argument("--out")
    h.set_defaults(func=cmd_hedge)

    s = sub.add_parser("selftest", help="run quick oracle checks; nonzero exit on failure")
    s.set_defaults(func=cmd_selftest)
    return parser


_PRICE_DEFAULTS = {"n_train": 50000, "n_eval": 200000, "seeds": "0", "format": "csv",
                   "input_space": InputSpace.LOG_PRICE.value}


class _Defaults:
    """Parser stand-in whose ``get_default`` returns the price defaults."""

    @staticmethod
    def get_default(key):
        return _PRICE_DEFAULTS.get(key)


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args, _Defaults)
    except (ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
