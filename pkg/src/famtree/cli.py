"""Command-line experiment runner.

    famtree grow --model linear --beta 0 --n 1e5 --reps 100 --watch root,2,2.1 \\
        --checkpoints 1e3,1e4,1e5 --seed 42 --out traj.csv
    famtree converge --model port --beta 1 --n 1e5 --reps 2000 --watch root
    famtree urn --a 1 --b 1 --c 1 --steps 1e5 --reps 2000
    famtree moments --model linear --beta 1 --watch root,2,3.1 --orders 1,2,3
    famtree validate --quick
"""

from __future__ import annotations

import argparse
import contextlib
import csv
import json
import math
import sys
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy import stats as sps

from . import acceptance, limits, stats, urn
from .core import Label, ModelError, ModelKind, Variant, format_label, parse_label, replicate_seed
from .engine import run_replicates

TRAJECTORY_SCHEMA = "famtree.trajectory/v1"
TRAJECTORY_COLUMNS = ["replicate", "n", "label", "degree", "normalized"]


class ConfigError(ValueError):
    pass


def sci_int(text: str) -> int:
    """Integer flag that also accepts scientific notation such as ``1e5``."""
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}")
    if not math.isfinite(value) or value != int(value):
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}")
    return int(value)


def int_list(text: str) -> list[int]:
    return [sci_int(t) for t in text.split(",") if t.strip()]


def label_list(text: str) -> list[Label]:
    return [parse_label(t) for t in text.split(",") if t.strip()]


def fmt(x: float) -> str:
    return "%.17g" % x


@dataclass
class ExperimentConfig:
    subcommand: str
    model: Optional[ModelKind] = None
    n: int = 1
    reps: int = 1
    watched: list[Label] = field(default_factory=lambda: [Label(())])
    checkpoints: list[int] = field(default_factory=list)
    seed: int = 0
    out: str = "-"
    format: str = "csv"
    threads: int = 1

    def validate(self) -> None:
        if self.reps < 1:
            raise ConfigError(f"--reps must be >= 1, got {self.reps}")
        if self.n < 1:
            raise ConfigError(f"--n must be >= 1, got {self.n}")
        if self.checkpoints != sorted(self.checkpoints):
            raise ConfigError("--checkpoints must be ascending")
        if self.checkpoints and (self.checkpoints[0] < 1 or self.checkpoints[-1] > self.n):
            raise ConfigError(f"--checkpoints must lie in [1, {self.n}]")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("--seed must be an unsigned 64-bit integer")


def _model(args) -> ModelKind:
    try:
        return ModelKind(Variant(args.model), args.beta)
    except ModelError as e:
        raise ConfigError(str(e))


def _config(args) -> ExperimentConfig:
    cfg = ExperimentConfig(
        subcommand=args.command,
        model=_model(args),
        n=args.n,
        reps=args.reps,
        watched=args.watch,
        checkpoints=args.checkpoints or [args.n],
        seed=args.seed,
        out=args.out,
        format=args.format,
        threads=args.threads,
    )
    cfg.validate()
    return cfg


@contextlib.contextmanager
def _open_out(path: str):
    if path == "-":
        yield sys.stdout
        return
    try:
        f = open(path, "w", newline="")
    except OSError as e:
        raise ConfigError(f"cannot write {path}: {e}")
    with f:
        yield f


def _replicates(cfg: ExperimentConfig):
    return run_replicates(cfg.model, cfg.n, cfg.seed, cfg.reps, watched=cfg.watched,
                          checkpoints=cfg.checkpoints, threads=cfg.threads)


def run_grow(cfg: ExperimentConfig) -> None:
    rs = _replicates(cfg)
    delta = cfg.model.scaling_exponent
    rows = []
    for r in range(rs.reps):
        for c, n in enumerate(rs.checkpoints):
            for j, lab in enumerate(rs.labels):
                d = int(rs.degrees[r, c, j])
                rows.append((r, n, format_label(lab), d, d / float(n) ** delta))
    with _open_out(cfg.out) as f:
        if cfg.format == "json":
            json.dump([dict(zip(TRAJECTORY_COLUMNS, row)) for row in rows], f)
            f.write("\n")
            return
        f.write(f"# schema: {TRAJECTORY_SCHEMA} model={cfg.model.variant.value} beta={fmt(cfg.model.beta)} "
                f"seed={cfg.seed}\n")
        w = csv.writer(f, lineterminator="\n")
        w.writerow(TRAJECTORY_COLUMNS)
        for r, n, lab, d, x in rows:
            w.writerow([r, n, lab, d, fmt(x)])


def converge_summary(cfg: ExperimentConfig, orders: Sequence[int] = (1, 2)) -> list[dict]:
    rs = _replicates(cfg)
    out = []
    for j, lab in enumerate(rs.labels):
        x = rs.final_normalized(lab)
        law = limits.limit_law(cfg.model, lab)
        moments = []
        for est in stats.empirical_moments(x, orders):
            theory = limits.zetax_moment(law, est.k)
            moments.append({"k": est.k, "empirical": est.estimate, "se": est.se,
                            "theoretical": theory, "ratio": est.estimate / theory})
        ks = None
        if limits.has_special_sampler(cfg.model):
            if lab.is_root:
                res = stats.ks_one_sample(x, limits.zeta0_special_cdf(cfg.model))
                ks = {"distance": res.distance, "reference": _cdf_name(cfg.model)}
            else:
                ref = limits.sample_limit_special(law, replicate_seed(cfg.seed, 2**32 + j), rs.reps)
                ks = {"distance": stats.ks_two_sample(x, ref),
                      "reference": f"two-sample vs {rs.reps} draws of the product law"}
        out.append({"model": cfg.model.variant.value, "beta": cfg.model.beta, "label": format_label(lab),
                    "n": rs.checkpoints[-1], "reps": rs.reps, "moments": moments, "ks": ks})
    return out


def _cdf_name(model: ModelKind) -> str:
    if model.is_port:
        return "1 - exp(-t^2/4)"
    return "sqrt(2)|N(0,1)|"


def run_converge(cfg: ExperimentConfig, orders: Sequence[int] = (1, 2)) -> None:
    summary = converge_summary(cfg, orders)
    with _open_out(cfg.out) as f:
        json.dump(summary, f, indent=2)
        f.write("\n")


def run_urn(args) -> None:
    if args.matrix:
        if not args.beta > 0:
            raise ConfigError("--matrix requires --beta > 0")
        cps = args.checkpoints or [args.steps]
        w = urn.generalized_runs(args.beta, args.steps, args.seed, args.reps, cps, args.threads)
        # W_n over n^(1/(1+beta)); should settle to a nondegenerate limit
        z = w / np.asarray(cps, dtype=float) ** (1.0 / (1.0 + args.beta))
        result = {"mode": "matrix", "beta": args.beta, "reps": args.reps,
                  "checkpoints": [{"draws": int(c), "mean": float(z[:, i].mean()), "var": float(z[:, i].var(ddof=1))
                                   if args.reps > 1 else 0.0} for i, c in enumerate(cps)]}
        values = z[:, -1]
    else:
        values = urn.polya_runs(args.a, args.b, args.c, args.steps, args.seed, args.reps, args.threads)
        a, b = args.a / args.c, args.b / args.c
        ks = None
        if b > 0:
            ks = {"distance": stats.ks_one_sample(values, lambda t: sps.beta.cdf(t, a, b)).distance,
                  "reference": f"Beta({a:g}, {b:g})"}
        result = {"mode": "scalar", "a": args.a, "b": args.b, "c": args.c, "steps": args.steps,
                  "reps": args.reps, "mean": float(values.mean()), "ks": ks}
    with _open_out(args.out) as f:
        if args.format == "csv":
            f.write("replicate,value\n")
            for i, v in enumerate(values):
                f.write(f"{i},{fmt(v)}\n")
        else:
            json.dump(result, f, indent=2)
            f.write("\n")


def run_moments(args) -> None:
    model = _model(args)
    out = []
    for lab in args.watch:
        law = limits.limit_law(model, lab)
        out.append({
            "model": model.variant.value, "beta": model.beta, "label": format_label(lab),
            "scaling_exponent": law.scaling_exponent,
            "factors": [{"a": f.a, "b": f.b, "degenerate": f.degenerate} for f in law.factors],
            "moments": [{"k": k, "value": limits.zetax_moment(law, k)} for k in args.orders],
        })
    with _open_out(args.out) as f:
        json.dump(out, f, indent=2)
        f.write("\n")


def run_validate(args) -> int:
    profile = "quick" if args.quick else "full"
    echo = lambda line: print(line, file=sys.stderr, flush=True)  # noqa: E731
    results = acceptance.run_all(profile, seed=args.seed, threads=args.threads, only=args.only,
                                 inject=args.inject_failure or (), echo=echo)
    rep = acceptance.report(results, profile, args.seed)
    with _open_out(args.out) as f:
        json.dump(rep, f, indent=2, default=str)
        f.write("\n")
    return 0 if rep["passed"] else 1


def _add_model(p, default_watch="root"):
    p.add_argument("--model", choices=[v.value for v in Variant], default="linear")
    p.add_argument("--beta", type=float, default=0.0)
    p.add_argument("--watch", type=label_list, default=label_list(default_watch),
                   help="comma-separated labels, e.g. root,2,2.1")


def _add_common(p):
    p.add_argument("--seed", type=sci_int, default=0)
    p.add_argument("--threads", type=sci_int, default=1)
    p.add_argument("--out", default="-")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="famtree", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    for name in ("grow", "converge"):
        p = sub.add_parser(name)
        _add_model(p)
        _add_common(p)
        p.add_argument("--n", type=sci_int, required=True)
        p.add_argument("--reps", type=sci_int, default=1)
        p.add_argument("--checkpoints", type=int_list, default=None)
        p.add_argument("--format", choices=["csv", "json"], default="csv" if name == "grow" else "json")
        if name == "converge":
            p.add_argument("--orders", type=int_list, default=[1, 2])

    p = sub.add_parser("urn")
    _add_common(p)
    p.add_argument("--a", type=float, default=1.0)
    p.add_argument("--b", type=float, default=1.0)
    p.add_argument("--c", type=float, default=1.0)
    p.add_argument("--matrix", action="store_true", help="generalized urn R=[[1,beta],[0,1+beta]]")
    p.add_argument("--beta", type=float, default=1.0)
    p.add_argument("--steps", type=sci_int, default=10**5)
    p.add_argument("--reps", type=sci_int, default=100)
    p.add_argument("--checkpoints", type=int_list, default=None)
    p.add_argument("--format", choices=["csv", "json"], default="json")

    p = sub.add_parser("moments")
    _add_model(p)
    p.add_argument("--orders", type=int_list, default=[1, 2, 3, 4])
    p.add_argument("--out", default="-")

    p = sub.add_parser("validate")
    p.add_argument("--quick", action="store_true")
    p.add_argument("--seed", type=sci_int, default=acceptance.DEFAULT_SEED)
    p.add_argument("--threads", type=sci_int, default=1)
    p.add_argument("--only", type=int_list, default=None)
    p.add_argument("--out", default="-")
    p.add_argument("--inject-failure", type=int_list, default=None, help=argparse.SUPPRESS)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "grow":
            run_grow(_config(args))
        elif args.command == "converge":
            run_converge(_config(args), args.orders)
        elif args.command == "urn":
            run_urn(args)
        elif args.command == "moments":
            run_moments(args)
        elif args.command == "validate":
            return run_validate(args)
    except (ConfigError, ValueError) as e:
        print(f"famtree {args.command}: error: {e}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
