"""Monte Carlo harness: sup-norm errors, replications, rate fits and variance checks.

Every replication draws its sample from ``sub_seed(base_seed, n, rep)``, so a
record depends only on the configuration and ``(n, rep)``.  Records are
sorted by ``(n, rep)`` before anything is aggregated or written, which makes
output files independent of the number of worker processes.
"""

import csv
import io
import json
import math
import os
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .bias_oracle import tilde_f
from .density import get_density
from .estimators import (
    classical_bandwidth,
    classical_kde_eval,
    pilot_at_points,
    schedule,
    variable_kde_eval,
)
from .kernel import get_kernel
from .regions import region_data, region_oracle
from .rng import sub_seed

RATE_EXPONENT = 4.0 / 9.0
X_AXES = ("log(log n / n)", "log n")
RECORD_COLUMNS = ("n", "rep", "seed", "grid_size", "sup_err_true", "sup_err_ideal",
                  "sup_err_classical", "sup_dev_variance", "sup_bias")
SUMMARY_COLUMNS = ("n", "reps", "median_true", "median_ideal", "median_classical",
                   "median_variance", "scaled_true", "scaled_ideal", "scaled_classical",
                   "scaled_variance")
ERROR_KEYS = {"true_twostage": "sup_err_true", "hhm_ideal": "sup_err_ideal",
              "classical": "sup_err_classical"}


class ExperimentError(ValueError):
    pass


class DegenerateFitError(ExperimentError, ArithmeticError):
    """Rate fit without enough spread in the x values (a numeric, not a validation, failure)."""


@dataclass(frozen=True)
class ExperimentConfig:
    """Settings of one Monte Carlo study (mirrors the JSON config file)."""

    density_name: str = "normal"
    estimator_tag: str = "hhm_ideal"
    n_list: tuple = (1024, 2048, 4096, 8192, 16384, 32768)
    replications: int = 50
    base_seed: int = 42
    r: float = 0.1
    eta: float = 0.0
    B: object = "auto"
    grid_spacing: float = 0.01
    region_mode: str = "oracle"
    kernel: str = "quintic"

    def __post_init__(self):
        object.__setattr__(self, "n_list", tuple(int(n) for n in self.n_list))
        ns = self.n_list
        if not ns or any(n < 8 for n in ns) or any(b <= a for a, b in zip(ns, ns[1:])):
            raise ExperimentError("n_list must be strictly increasing integers >= 8")
        if int(self.replications) != self.replications or self.replications < 1:
            raise ExperimentError("replications must be a positive integer")
        if self.region_mode not in ("oracle", "data_driven"):
            raise ExperimentError("region_mode must be 'oracle' or 'data_driven'")
        if self.estimator_tag not in ERROR_KEYS:
            raise ExperimentError(f"estimator_tag must be one of {sorted(ERROR_KEYS)}")
        if not self.r > 0 or not self.grid_spacing > 0:
            raise ExperimentError("r and grid_spacing must be positive")
        if not 0.0 <= self.eta < 1.0:
            raise ExperimentError("eta must lie in [0, 1)")
        if self.B != "auto":
            if not float(self.B) >= get_kernel(self.kernel).half_width / math.sqrt(self.r):
                raise ExperimentError("B must be 'auto' or at least T / sqrt(r)")

    @classmethod
    def from_dict(cls, d):
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise ExperimentError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)

    @classmethod
    def from_json(cls, path):
        if not os.path.exists(path):
            raise ExperimentError(f"config file not found: {path}")
        with open(path) as fh:
            try:
                return cls.from_dict(json.load(fh))
            except json.JSONDecodeError as exc:
                raise ExperimentError(f"invalid JSON in {path}: {exc}") from None

    def to_dict(self):
        out = asdict(self)
        out["n_list"] = list(self.n_list)
        return out

    def B_value(self):
        if self.B == "auto":
            return get_kernel(self.kernel).half_width / math.sqrt(self.r)
        return float(self.B)


@dataclass(frozen=True)
class RateFit:
    """OLS fit of log median sup-error against an effective-size axis."""

    slope: float
    intercept: float
    r_squared: float
    x_axis: str
    points: tuple = field(default=())

    def to_dict(self):
        return {"slope": self.slope, "intercept": self.intercept, "r_squared": self.r_squared,
                "x_axis": self.x_axis, "points": [list(p) for p in self.points]}


def sup_error(curve, d, reg=None):
    """``max |value - f(t)|`` over the curve grid (optionally checked to lie in ``reg``)."""
    grid = np.asarray(curve.grid, dtype=float)
    if grid.size == 0:
        raise ExperimentError("empty grid")
    if reg is not None and not np.all(reg.contains_point(grid)):
        raise ExperimentError("curve grid leaves the region")
    return float(np.max(np.abs(np.asarray(curve.values) - d.pdf(grid))))


def lattice_grid(reg, spacing):
    """Points ``j * spacing`` lying strictly inside the region."""
    pts = []
    for a, b in reg.intervals:
        j = np.arange(math.floor(a / spacing), math.ceil(b / spacing) + 1)
        g = j * spacing
        pts.append(g[(g > a) & (g < b)])
    return np.concatenate(pts) if pts else np.empty(0)


def run_replication(cfg, n, rep_index):
    """Sup-norm errors of the three estimators for one ``(n, rep)`` draw."""
    d = get_density(cfg.density_name)
    k = get_kernel(cfg.kernel)
    B = cfg.B_value()
    seed = sub_seed(cfg.base_seed, n, rep_index)
    sample = d.sample(n, seed)
    x = sample.observations
    bw = schedule(n, cfg.eta)
    pilot = pilot_at_points(x, bw.h1, k)
    if cfg.region_mode == "oracle":
        reg = region_oracle(d, cfg.r)
    else:
        reg = region_data(sample, bw, k, cfg.r)
    grid = lattice_grid(reg, cfg.grid_spacing)
    rec = {"n": int(n), "rep": int(rep_index), "seed": seed, "grid_size": int(grid.size)}
    if grid.size == 0:
        rec.update({key: math.nan for key in RECORD_COLUMNS[4:]})
        return rec
    f = d.pdf(grid)
    ideal = variable_kde_eval(x, np.sqrt(d.pdf(x)), bw.h2, B, k, grid)
    true = variable_kde_eval(x, np.sqrt(pilot), bw.h2, B, k, grid)
    classical = classical_kde_eval(x, classical_bandwidth(n), k, grid)
    tf = tilde_f(grid, bw.h2, d, k, B)
    rec.update({
        "sup_err_true": float(np.max(np.abs(true - f))),
        "sup_err_ideal": float(np.max(np.abs(ideal - f))),
        "sup_err_classical": float(np.max(np.abs(classical - f))),
        "sup_dev_variance": float(np.max(np.abs(ideal - tf))),
        "sup_bias": float(np.max(np.abs(tf - f))),
    })
    return rec


def _job(args):
    cfg, n, rep = args
    return run_replication(cfg, n, rep)


def run_experiment(cfg, jobs=1):
    """All replications of ``cfg``, sorted by ``(n, rep)``."""
    tasks = [(cfg, n, rep) for n in cfg.n_list for rep in range(cfg.replications)]
    if jobs is None:
        jobs = os.cpu_count() or 1
    if jobs <= 1:
        records = [_job(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            records = list(pool.map(_job, tasks, chunksize=1))
    return sorted(records, key=lambda r: (r["n"], r["rep"]))


def variance_scale(n, eta=0.0):
    """``sqrt(n h2 / log(1/h2))``, the inverse of the stochastic rate."""
    h2 = schedule(n, eta).h2
    return math.sqrt(n * h2 / math.log(1.0 / h2))


def rate_scale(n):
    """``(n / log n)^{4/9}``."""
    return (n / math.log(n)) ** RATE_EXPONENT


def _medians(records, key):
    by_n = {}
    for rec in records:
        by_n.setdefault(rec["n"], []).append(rec[key])
    return {n: float(np.median(v)) for n, v in sorted(by_n.items())}


def summarize(records, cfg):
    """Per-``n`` medians and scaled medians."""
    med = {k: _medians(records, ERROR_KEYS[k]) for k in ERROR_KEYS}
    var = _medians(records, "sup_dev_variance")
    reps = {}
    for rec in records:
        reps[rec["n"]] = reps.get(rec["n"], 0) + 1
    rows = []
    for n in sorted(var):
        rs = rate_scale(n)
        rows.append({
            "n": n, "reps": reps[n],
            "median_true": med["true_twostage"][n], "median_ideal": med["hhm_ideal"][n],
            "median_classical": med["classical"][n], "median_variance": var[n],
            "scaled_true": med["true_twostage"][n] * rs, "scaled_ideal": med["hhm_ideal"][n] * rs,
            "scaled_classical": med["classical"][n] * (n / math.log(n)) ** 0.4,
            "scaled_variance": var[n] * variance_scale(n, cfg.eta),
        })
    return rows


def fit_rate(ns, errors, x_axis=X_AXES[0]):
    """OLS of ``log(errors)`` on ``log(log n / n)`` (or ``log n``).

    With errors proportional to ``(log n / n)^{4/9}`` the slope is ``+4/9``.
    """
    if x_axis not in X_AXES:
        raise ExperimentError(f"x_axis must be one of {X_AXES}")
    ns = np.asarray(ns, dtype=float)
    y = np.log(np.asarray(errors, dtype=float))
    x = np.log(np.log(ns) / ns) if x_axis == X_AXES[0] else np.log(ns)
    if len(x) < 2 or np.ptp(x) <= 1e-12 * max(1.0, np.max(np.abs(x))):
        raise DegenerateFitError("degenerate x-spread in rate fit")
    if not np.all(np.isfinite(y)):
        raise DegenerateFitError("non-finite or non-positive errors in rate fit")
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    sst = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 if sst == 0 else min(1.0, max(0.0, 1.0 - float(np.sum(resid ** 2)) / sst))
    return RateFit(float(slope), float(intercept), r2, x_axis,
                   tuple((float(a), float(b)) for a, b in zip(x, y)))


def rate_fit(cfg, records=None, estimator=None, jobs=1, strict=True):
    """Rate fit of median sup-error for ``estimator`` (default ``cfg.estimator_tag``).

    ``strict`` enforces at least four sample sizes and twenty replications.
    """
    if strict and (len(cfg.n_list) < 4 or cfg.replications < 20):
        raise ExperimentError("rate_fit needs >= 4 sample sizes and >= 20 replications")
    if records is None:
        records = run_experiment(cfg, jobs)
    med = _medians(records, ERROR_KEYS[estimator or cfg.estimator_tag])
    return fit_rate(list(med), list(med.values()))


@dataclass
class VarianceTable:
    """Scaled median stochastic deviation per ``n``."""

    rows: list
    tolerance: float = 0.2

    @property
    def change(self):
        first, last = self.rows[0]["scaled"], self.rows[-1]["scaled"]
        return last / first - 1.0

    @property
    def passed(self):
        return abs(self.change) <= self.tolerance


def variance_rate_check(cfg, records=None, jobs=1, tolerance=0.2):
    """Median ``sup |ideal - tilde_f| * sqrt(n h2 / log(1/h2))`` per ``n``.

    Passes when the value at the largest ``n`` is within ``tolerance``
    (relative) of the value at the smallest ``n``.
    """
    if records is None:
        records = run_experiment(cfg, jobs)
    var = _medians(records, "sup_dev_variance")
    rows = [{"n": n, "median": v, "scaled": v * variance_scale(n, cfg.eta)} for n, v in var.items()]
    return VarianceTable(rows, tolerance)


def compare(cfg, records=None, jobs=1):
    """Classical, ideal and two-stage estimators side by side (one row per ``(n, estimator)``)."""
    if records is None:
        records = run_experiment(cfg, jobs)
    rows = []
    for tag, key in (("classical", "sup_err_classical"), ("hhm_ideal", "sup_err_ideal"),
                     ("true_twostage", "sup_err_true")):
        for n, v in _medians(records, key).items():
            rows.append({"n": n, "estimator": tag, "median_sup_err": v,
                         "scaled": v * rate_scale(n)})
    return sorted(rows, key=lambda r: (r["n"], r["estimator"]))


# ---------------------------------------------------------------------------
# Output
# ---------------------------------------------------------------------------

def fmt(v):
    """17 significant digits for floats, plain text otherwise."""
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


def csv_text(rows, columns):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        vals = row if isinstance(row, (tuple, list)) else [row[c] for c in columns]
        w.writerow([fmt(v) for v in vals])
    return buf.getvalue()


def _json_ready(obj):
    if isinstance(obj, dict):
        return {k: _json_ready(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_ready(v) for v in obj]
    if isinstance(obj, (float, np.floating)):
        return float(fmt(obj))
    return obj


def atomic_write(path, text):
    """Write ``text`` to a temporary file next to ``path`` and rename it into place."""
    folder = os.path.dirname(os.path.abspath(path))
    os.makedirs(folder, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=folder, prefix=".tmp-")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_rate_outputs(cfg, records, out_dir):
    """``records.csv``, ``summary.csv`` and ``ratefit.json`` in ``out_dir``."""
    atomic_write(os.path.join(out_dir, "records.csv"), csv_text(records, RECORD_COLUMNS))
    atomic_write(os.path.join(out_dir, "summary.csv"),
                 csv_text(summarize(records, cfg), SUMMARY_COLUMNS))
    # a degenerate fit of the configured estimator is an error; the others are reported inline
    fits = {cfg.estimator_tag: rate_fit(cfg, records, cfg.estimator_tag, strict=False).to_dict()}
    for tag in ERROR_KEYS:
        if tag != cfg.estimator_tag:
            try:
                fits[tag] = rate_fit(cfg, records, tag, strict=False).to_dict()
            except DegenerateFitError as exc:
                fits[tag] = {"error": str(exc)}
    main = dict(fits[cfg.estimator_tag])
    main.update({
        "estimator": cfg.estimator_tag,
        "adequate": len(cfg.n_list) >= 4 and cfg.replications >= 20,
        "target_slope": RATE_EXPONENT,
        "by_estimator": fits,
        "config": cfg.to_dict(),
    })
    atomic_write(os.path.join(out_dir, "ratefit.json"),
                 json.dumps(_json_ready(main), indent=2, sort_keys=True) + "\n")
    return main
