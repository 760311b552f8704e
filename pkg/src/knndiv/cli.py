"""Command-line front end: simulate, estimate, weights, fit-basis."""

from __future__ import annotations

import argparse
import sys

import numpy as np

from .basis import fit_alpha, get_target
from .estimator import estimate_functional
from .experiments import emit_results, load_config, load_dataset, parse_fractions, run_simulation
from .knn import SplitDataset
from .weights import EnsembleConfig, exact_weights, relaxed_weights


def _fmt(x: float) -> str:
    return format(float(x), ".12g")


def _cmd_simulate(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    rows = run_simulation(config)
    out = args.output or config.output
    emit_results(rows, out)
    print(f"wrote {len(rows)} rows to {out}")
    return 0


def _cmd_estimate(args: argparse.Namespace) -> int:
    data = load_dataset(args.data, header=args.header)
    split = SplitDataset.from_dataset(data)
    target = get_target(args.target)
    ks = tuple(int(k) for k in args.ks.split(","))
    ls = parse_fractions(args.ls)
    d = args.d if args.d is not None else data.d
    result = estimate_functional(
        split, target, ks, ls, d=d, lam=args.lam, method=args.method, seed=args.seed
    )
    print(f"target {target.name}")
    print(f"method {result.weights.method if result.weights else 'plain'}")
    for (k, phi), a in zip(result.per_k_phi, result.alpha.alpha):
        print(f"k={k} alpha={_fmt(a)} phi={_fmt(phi)}")
    if result.weights is not None:
        print("w " + " ".join(_fmt(v) for v in result.weights.w))
        print(f"epsilon {_fmt(result.weights.epsilon)}")
    print(f"estimate {_fmt(result.value)}")
    return 0


def _cmd_weights(args: argparse.Namespace) -> int:
    config = EnsembleConfig(ls=parse_fractions(args.ls), d=args.d, n=args.n, lam=args.lam)
    solved = exact_weights(config) if args.method == "exact" else relaxed_weights(config)
    for l, w in zip(config.ls, solved.w):
        print(f"l={_fmt(l)} w={_fmt(w)}")
    print(f"epsilon {_fmt(solved.epsilon)}")
    print(f"sum_residual {_fmt(abs(float(np.sum(solved.w)) - 1.0))}")
    rows = config.bias_rows()
    for j, row in zip(config.exponents, rows):
        value = float(row @ solved.w)
        bound = solved.epsilon * float(config.n) ** (j / config.d - 0.5)
        print(f"j={j} bias_term={_fmt(value)} bound={_fmt(bound)}")
    return 0


def _cmd_fit_basis(args: argparse.Namespace) -> int:
    target = get_target(args.target)
    ks = tuple(int(k) for k in args.ks.split(","))
    coeffs = fit_alpha(target, ks, args.grid)
    for k, a in zip(coeffs.ks, coeffs.alpha):
        print(f"k={k} alpha={_fmt(a)}")
    print(f"residual {_fmt(coeffs.fit_residual)}")
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="knndiv",
        description="Density-functional estimation from k-NN error rates",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run a Monte Carlo convergence study")
    p.add_argument("--config", required=True, help="JSON config file")
    p.add_argument("--output", help="override the config's output path")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("estimate", help="estimate a functional from a CSV dataset")
    p.add_argument("--data", required=True, help="CSV: feature columns then a 0/1 label")
    p.add_argument("--target", default="hellinger")
    p.add_argument("--ks", default="1,3,5,7,9", help="comma-separated odd k values")
    p.add_argument("--ls", default="log:0.05,0.5,12", help="fractions list or log:lo,hi,count")
    p.add_argument("--d", type=int, default=None, help="intrinsic dimension (default: ambient)")
    p.add_argument("--lambda", dest="lam", type=float, default=1.0)
    p.add_argument("--method", choices=("plain", "exact", "relaxed"), default="relaxed")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--header", action="store_true", help="skip the first CSV line")
    p.set_defaults(func=_cmd_estimate)

    p = sub.add_parser("weights", help="solve an ensemble weight program")
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--lambda", dest="lam", type=float, default=1.0)
    p.add_argument("--ls", required=True, help="fractions list or log:lo,hi,count")
    p.add_argument("--method", choices=("exact", "relaxed"), default="relaxed")
    p.set_defaults(func=_cmd_weights)

    p = sub.add_parser("fit-basis", help="fit basis coefficients for a target functional")
    p.add_argument("--target", default="hellinger")
    p.add_argument("--ks", default="1,3,5,7,9")
    p.add_argument("--grid", type=int, default=1001)
    p.set_defaults(func=_cmd_fit_basis)
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except Exception as exc:  # surfaced as a single machine-readable line
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
