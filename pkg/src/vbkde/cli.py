"""``vbkde`` command line: estimate, bias-check, linearize, rate, compare.

Exit status is 0 on success, 1 for invalid input and 2 for numeric failures.
Set ``VBKDE_SEED`` to override ``base_seed`` in experiment configs.
"""

import argparse
import os
import sys

import numpy as np

from . import __version__
from .bias_oracle import bias_ratio_curve
from .decomposition import DecompContext, linearization_gap
from .density import get_density
from .estimators import CSV_COLUMNS, ESTIMATORS, default_B, evaluate_curve, schedule
from .experiments import (
    ExperimentConfig,
    ExperimentError,
    atomic_write,
    compare,
    csv_text,
    rate_scale,
    run_experiment,
    write_rate_outputs,
)
from .kernel import get_kernel
from .regions import region_grid, region_oracle


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def parse_grid(text):
    """``lo:hi:count`` to an evenly spaced grid (``count >= 1``)."""
    try:
        lo, hi, count = text.split(":")
        lo, hi, count = float(lo), float(hi), int(count)
    except ValueError:
        raise UsageError(f"grid must look like lo:hi:count, got {text!r}") from None
    if count < 1 or not hi >= lo:
        raise UsageError("grid needs count >= 1 and hi >= lo")
    return np.linspace(lo, hi, count)


def parse_floats(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"expected comma-separated numbers, got {text!r}") from None


def parse_seeds(text):
    """``1,2,5`` or ``1..10`` (inclusive)."""
    try:
        if ".." in text:
            a, b = text.split("..")
            return list(range(int(a), int(b) + 1))
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"seeds must look like 1,2,3 or 1..10, got {text!r}") from None


def load_config(path):
    cfg = ExperimentConfig.from_json(path)
    env = os.environ.get("VBKDE_SEED")
    if env is not None:
        try:
            seed = int(env)
        except ValueError:
            raise UsageError(f"VBKDE_SEED must be an integer, got {env!r}") from None
        cfg = ExperimentConfig.from_dict(dict(cfg.to_dict(), base_seed=seed))
    return cfg


def cmd_estimate(a):
    d = get_density(a.density)
    k = get_kernel(a.kernel)
    if a.n < 1:
        raise UsageError("--n must be positive")
    sample = d.sample(a.n, a.seed)
    bw = schedule(max(a.n, 3), a.eta)
    B = a.B if a.B is not None else default_B(k, a.r)
    curve = evaluate_curve(a.estimator, sample, k, parse_grid(a.grid), bw=bw, B=B,
                           density=d, h=a.h)
    atomic_write(a.out, csv_text(list(curve.rows()), CSV_COLUMNS))


def cmd_bias_check(a):
    d = get_density(a.density)
    k = get_kernel(a.kernel)
    B = a.B if a.B is not None else default_B(k, a.r)
    rows = bias_ratio_curve(d, k, a.r, B, parse_floats(a.h), min_points=a.points)
    atomic_write(a.out, csv_text(rows, ("h", "sup_dev", "argmax_t")))


def cmd_linearize(a):
    d = get_density(a.density)
    k = get_kernel(a.kernel)
    B = a.B if a.B is not None else default_B(k, a.r)
    bw = schedule(a.n, a.eta)
    grid = region_grid(region_oracle(d, a.r), a.spacing)
    rows = []
    for seed in parse_seeds(a.seeds):
        ctx = DecompContext(d.sample(a.n, seed), d, k, bw, B, a.r)
        gap = linearization_gap(ctx, grid, a.T_weight)
        rows.append({"n": a.n, "seed": seed, "sup_gap": gap, "sup_gap_scaled": gap * rate_scale(a.n)})
    atomic_write(a.out, csv_text(rows, ("n", "seed", "sup_gap", "sup_gap_scaled")))


def cmd_rate(a):
    cfg = load_config(a.config)
    records = run_experiment(cfg, a.jobs)
    write_rate_outputs(cfg, records, a.out)


def cmd_compare(a):
    cfg = load_config(a.config)
    rows = compare(cfg, jobs=a.jobs)
    atomic_write(a.out, csv_text(rows, ("n", "estimator", "median_sup_err", "scaled")))


def build_parser():
    p = _Parser(prog="vbkde", description="Square-root-law variable-bandwidth KDE toolkit.")
    p.add_argument("--version", action="version", version=f"vbkde {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, need_n=False):
        sp.add_argument("--density", required=True, help="panel name or mixture JSON")
        sp.add_argument("--r", type=float, required=True, help="region level")
        sp.add_argument("--B", type=float, default=None, help="window constant (default T/sqrt(r))")
        sp.add_argument("--kernel", default="quintic", help="kernel name or JSON file")
        sp.add_argument("--out", required=True)
        if need_n:
            sp.add_argument("--n", type=int, required=True)
            sp.add_argument("--eta", type=float, default=0.0, help="pilot undersmoothing offset")

    sp = sub.add_parser("estimate", help="evaluate one estimator on a grid")
    common(sp, need_n=True)
    sp.add_argument("--seed", type=int, required=True)
    sp.add_argument("--estimator", required=True, choices=ESTIMATORS)
    sp.add_argument("--grid", required=True, help="lo:hi:count")
    sp.add_argument("--h", type=float, default=None,
                    help="single bandwidth for the classical or Abramson estimator")
    sp.set_defaults(func=cmd_estimate)

    sp = sub.add_parser("bias-check", help="sup deviation of the h^4 bias law")
    common(sp)
    sp.add_argument("--h", required=True, help="comma-separated bandwidths")
    sp.add_argument("--points", type=int, default=400, help="minimum grid size")
    sp.set_defaults(func=cmd_bias_check)

    sp = sub.add_parser("linearize", help="two-stage minus ideal minus linear term")
    common(sp, need_n=True)
    sp.add_argument("--seeds", required=True, help="1,2,3 or 1..10")
    sp.add_argument("--spacing", type=float, default=0.02)
    sp.add_argument("--T-weight", dest="T_weight", type=float, default=0.5,
                    help="coefficient of the linear term")
    sp.set_defaults(func=cmd_linearize)

    for name, func, helptext in (("rate", cmd_rate, "Monte Carlo rate experiment"),
                                 ("compare", cmd_compare, "classical vs ideal vs two-stage")):
        sp = sub.add_parser(name, help=helptext)
        sp.add_argument("--config", required=True)
        sp.add_argument("--out", required=True,
                        help="output directory" if name == "rate" else "output CSV")
        sp.add_argument("--jobs", type=int, default=os.cpu_count() or 1)
        sp.set_defaults(func=func)
    return p


def _glue_values(argv):
    """Attach values such as ``-2:2:41`` to their flag so they are not read as options."""
    out = []
    it = iter(argv)
    for tok in it:
        if tok in ("--grid", "--h", "--seeds"):
            nxt = next(it, None)
            out.append(tok if nxt is None else f"{tok}={nxt}")
        else:
            out.append(tok)
    return out


def main(argv=None):
    argv = sys.argv[1:] if argv is None else list(argv)
    args = build_parser().parse_args(_glue_values(argv))
    try:
        args.func(args)
    except (ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"vbkde: numeric failure: {exc}", file=sys.stderr)
        return 2
    except (UsageError, ExperimentError, ValueError, OSError, KeyError) as exc:
        print(f"vbkde: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
