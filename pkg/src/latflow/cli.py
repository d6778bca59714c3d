"""Command-line entry point.

Every subcommand builds an ExperimentConfig, runs it through the
dispatcher and prints the report summary.  Exit codes: 0 success,
2 invalid configuration, 3 budget exceeded with partial output.
"""

from __future__ import annotations

import argparse
import json
import sys

from .config import ExperimentConfig, report, run
from .errors import BudgetExceeded, ConfigInvalid, LatflowError


def _add_common(p):
    p.add_argument("--precision", type=int, default=128, help="scalar precision bits")
    p.add_argument("--seed", type=int, default=0, help="master seed (Philox key)")
    p.add_argument("--out", default="runs", help="artifact directory")
    p.add_argument("--config", default=None, help="JSON config file (overrides flags)")


def _grid(text):
    return [float(v) for v in text.split(",")]


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="latflow",
                                 description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("approx", help="best-approximation records of Y")
    p.add_argument("--Y", required=True)
    p.add_argument("--qmax", type=int, required=True)
    _add_common(p)

    p = sub.add_parser("exponent", help="Diophantine exponent estimate")
    p.add_argument("--Y", required=True)
    p.add_argument("--qmax", type=int, required=True)
    p.add_argument("--tail", type=int, default=16)
    _add_common(p)

    p = sub.add_parser("singular", help="rate-singularity evidence scan")
    p.add_argument("--Y", required=True)
    p.add_argument("--nmax", type=float, required=True)
    p.add_argument("--c-grid", type=_grid, default=[0.5, 0.25, 0.1])
    _add_common(p)

    p = sub.add_parser("di", help="Dirichlet epsilon-improvement test")
    p.add_argument("--Y", required=True)
    p.add_argument("--epsilon", type=float, required=True)
    p.add_argument("--tmax", type=float, default=15.0)
    p.add_argument("--tstep", type=float, default=0.5)
    _add_common(p)

    p = sub.add_parser("vwma", help="multiplicative approximation scan")
    p.add_argument("--Y", required=True)
    p.add_argument("--qmax", type=int, required=True)
    p.add_argument("--delta-grid", type=_grid, default=[0.5])
    _add_common(p)

    p = sub.add_parser("kg-sum", help="Khintchine-Groshev series diagnostic")
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--kmax", type=int, default=10**6)
    p.add_argument("--rate-exponent", type=float, default=-2.0,
                   help="power rate k^e for the series")
    _add_common(p)

    p = sub.add_parser("orbit", help="delta along a diagonal-flow trajectory")
    p.add_argument("--m", type=int, default=None)
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--Y", required=True)
    p.add_argument("--tmax", type=float, required=True)
    p.add_argument("--ray", default="central",
                   help="central | weights=<w1:...:wk> | grid")
    _add_common(p)

    p = sub.add_parser("gamma", help="growth exponent of a trajectory")
    p.add_argument("--Y", required=True)
    p.add_argument("--tmax", type=float, required=True)
    p.add_argument("--ray", default="central")
    p.add_argument("--window", type=float, default=0.5)
    _add_common(p)

    p = sub.add_parser("xval", help="cross-validate both sides of the dictionary")
    p.add_argument("--Y", required=True)
    p.add_argument("--qmax", type=int, default=10**5)
    p.add_argument("--horizon", type=float, default=25.0, help="ray parameter cap")
    _add_common(p)

    p = sub.add_parser("dichotomy", help="bulk-vs-special verdict experiment")
    p.add_argument("--manifold", required=True, help="manifold spec JSON file")
    p.add_argument("--samples", type=int, required=True)
    p.add_argument("--scan", default="omega", help="comma list: omega,singular")
    p.add_argument("--qmax", type=int, default=10**4)
    _add_common(p)

    p = sub.add_parser("nondiv", help="sublevel measure of delta over a ball")
    p.add_argument("--manifold", required=True)
    p.add_argument("--t", type=float, required=True)
    p.add_argument("--rho", type=float, required=True)
    p.add_argument("--samples", type=int, default=10**4)
    _add_common(p)

    p = sub.add_parser("cag", help="sublevel-measure goodness fit of a function")
    p.add_argument("--fn", required=True, help="x | x^2 | x^3 | x^4")
    p.add_argument("--ball", type=_grid, default=[0.0, 1.0], help="center,radius")
    _add_common(p)

    p = sub.add_parser("construct-singular", help="build a scheduled-singular subspace")
    p.add_argument("--s", type=int, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--levels", type=int, default=3)
    _add_common(p)

    return ap


def _config_from_args(args) -> ExperimentConfig:
    if args.config:
        with open(args.config, "r", encoding="utf-8") as fh:
            d = json.load(fh)
        return ExperimentConfig.from_dict(d, out_dir=args.out)
    cmd = args.command
    params: dict = {}
    if cmd in ("approx", "exponent", "singular", "di", "vwma", "orbit", "gamma", "xval"):
        params["y"] = args.Y
    if cmd in ("approx", "exponent", "vwma"):
        params["q_max"] = args.qmax
    if cmd == "exponent":
        params["tail"] = args.tail
    if cmd == "singular":
        params["n_max"] = args.nmax
        params["c_grid"] = args.c_grid
    if cmd == "di":
        params["epsilon"] = args.epsilon
        steps = int(args.tmax / args.tstep)
        params["t_grid"] = [round((i + 1) * args.tstep, 10) for i in range(steps)]
    if cmd == "vwma":
        params["delta_grid"] = args.delta_grid
    if cmd == "kg-sum":
        params.update(m=args.m, n=args.n, k_max=args.kmax,
                      phi={"kind": "power", "c": 1.0, "exponent": args.rate_exponent})
    if cmd in ("orbit", "gamma"):
        params["t_max"] = args.tmax
        params["ray"] = args.ray
    if cmd == "orbit":
        if args.m is not None:
            params["m"] = args.m
        if args.n is not None:
            params["n"] = args.n
    if cmd == "gamma":
        params["window"] = args.window
    if cmd == "xval":
        params["q_max"] = args.qmax
        params["t_max"] = args.horizon
    if cmd == "dichotomy":
        params.update(manifold=args.manifold, count=args.samples,
                      scan=args.scan.split(","), q_max=args.qmax)
    if cmd == "nondiv":
        params.update(manifold=args.manifold, t=args.t, rho=args.rho,
                      samples=args.samples)
    if cmd == "cag":
        params.update(fn=args.fn, ball=tuple(args.ball))
    if cmd == "construct-singular":
        params.update(s=args.s, n=args.n, levels=args.levels)
    return ExperimentConfig(kind=cmd, params=params, precision_bits=args.precision,
                            seed=args.seed, out_dir=args.out)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = _config_from_args(args)
        record = run(config)
    except ConfigInvalid as err:
        print(f"config error: {err}", file=sys.stderr)
        return 2
    except BudgetExceeded as err:
        print(f"budget exceeded: {err}", file=sys.stderr)
        return 3
    except LatflowError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    print(report(record))
    return record.exit_code


if __name__ == "__main__":
    sys.exit(main())
