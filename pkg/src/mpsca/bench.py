"""Monte-Carlo sweeps over K: result rows, aggregates, and their CSV/JSON forms."""

import csv
import io
import json
import logging
import math
import time
import traceback
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from mpsca.channelgen import ChannelModelConfig, draw_instance
from mpsca.oracle import oracle
from mpsca.problem import to_db
from mpsca.selection import BisectionConfig, ScaConfig, solve_joint

log = logging.getLogger(__name__)

RESULTS_FORMAT_VERSION = 1
RESULT_COLUMNS = (
    "format_version", "trial", "k", "method", "min_snr_db", "subset",
    "lambda_star", "sca_iters", "mp_iters", "wall_ms",
)
AGGREGATE_COLUMNS = ("k", "method", "mean_snr_db", "mean_time_ms", "rows")
METHODS = ("spmp-sca", "oracle")


@dataclass(frozen=True)
class ExperimentConfig:
    n: int = 30
    m: int = 50
    power: float = 10.0
    noise_var: float = 1.0
    ks: tuple = (5, 10, 20)
    trials: int = 200
    seed: int = 0
    methods: tuple = ("spmp-sca",)
    oracle_restarts: int = 5
    sca: ScaConfig = field(default_factory=ScaConfig)
    bisection: BisectionConfig = field(default_factory=BisectionConfig)
    timing: bool = True

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError(f"trials must be >= 1, got {self.trials}")
        if not self.ks:
            raise ValueError("at least one K is required")
        bad = [k for k in self.ks if not 1 <= k <= self.n]
        if bad:
            raise ValueError(f"K values {bad} outside [1, {self.n}]")
        unknown = [m for m in self.methods if m not in METHODS]
        if unknown:
            raise ValueError(f"unknown method(s) {unknown}; expected {METHODS}")
        if not self.power > 0 or not self.noise_var > 0:
            raise ValueError("power and noise_var must be positive")

    def channel_model(self):
        return ChannelModelConfig(self.n, self.m, noise_var=self.noise_var, seed=self.seed)

    def instance(self, trial):
        return draw_instance(self.channel_model(), power=self.power, trial=trial)

    def solver_config(self, trial):
        return replace(self.sca, seed=self.seed + trial)

    def to_dict(self):
        d = asdict(self)
        d["ks"] = list(self.ks)
        d["methods"] = list(self.methods)
        return d


@dataclass
class ResultRow:
    trial: int
    k: int
    method: str
    min_snr_db: float
    subset: tuple
    lambda_star: float  # nan for oracle rows
    sca_iters: int
    mp_iters: int
    wall_ms: float
    exact_k: bool = True
    error: str = None

    def csv_fields(self):
        return {
            "format_version": RESULTS_FORMAT_VERSION,
            "trial": self.trial,
            "k": self.k,
            "method": self.method,
            "min_snr_db": _num(self.min_snr_db),
            "subset": ";".join(str(i) for i in self.subset),
            "lambda_star": _num(self.lambda_star),
            "sca_iters": self.sca_iters,
            "mp_iters": self.mp_iters,
            "wall_ms": _num(self.wall_ms),
        }

    def to_dict(self):
        return {
            "format_version": RESULTS_FORMAT_VERSION,
            "trial": self.trial,
            "k": self.k,
            "method": self.method,
            "min_snr_db": _json_num(self.min_snr_db),
            "subset": list(self.subset),
            "lambda_star": _json_num(self.lambda_star),
            "sca_iters": self.sca_iters,
            "mp_iters": self.mp_iters,
            "wall_ms": _json_num(self.wall_ms),
            "exact_k": self.exact_k,
            "error": self.error,
        }


def _num(x):
    return "" if x is None or (isinstance(x, float) and math.isnan(x)) else repr(float(x))


def _json_num(x):
    return None if x is None or math.isnan(x) else float(x)


def run_one(cfg, trial, k, method):
    """One (trial, K, method) cell; exceptions become an error row."""
    t0 = time.perf_counter()
    try:
        inst = cfg.instance(trial)
        sca = cfg.solver_config(trial)
        if method == "spmp-sca":
            res = solve_joint(inst, k, sca, cfg.bisection)
            row = ResultRow(trial, k, method, res.min_snr_db, tuple(int(a) for a in res.antennas),
                            res.lam_star, res.sca_iterations, res.mp_iterations, 0.0, res.exact)
        else:
            res = oracle(inst, k, sca, restarts=cfg.oracle_restarts)
            row = ResultRow(trial, k, "oracle", res.min_snr_db,
                            tuple(res.subset), math.nan, res.sca_iterations, res.mp_iterations, 0.0)
    except Exception as exc:  # recorded per row; the sweep continues
        log.error("trial %d, K=%d, %s failed: %s", trial, k, method, exc)
        row = ResultRow(trial, k, method, math.nan, (), math.nan, 0, 0, 0.0, False,
                        error="".join(traceback.format_exception_only(type(exc), exc)).strip())
    if cfg.timing:
        row.wall_ms = (time.perf_counter() - t0) * 1e3
    return row


def _cell(args):
    return run_one(*args)


def run_bench(cfg, workers=1):
    """All rows in (trial, K, method) order regardless of completion order."""
    cells = [(cfg, t, k, m) for t in range(cfg.trials) for k in cfg.ks for m in cfg.methods]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_cell, cells))
    return [_cell(c) for c in cells]


def aggregate(rows):
    """Mean min-SNR (dB) and mean wall time per (K, method), skipping failed rows."""
    groups = {}
    for r in rows:
        if r.error is None:
            groups.setdefault((r.k, r.method), []).append(r)
    out = []
    for (k, method), rs in sorted(groups.items(), key=lambda kv: (kv[0][0], METHODS.index(kv[0][1]))):
        out.append({
            "k": k,
            "method": method,
            "mean_snr_db": float(np.mean([r.min_snr_db for r in rs])),
            "mean_time_ms": float(np.mean([r.wall_ms for r in rs])),
            "rows": len(rs),
        })
    return out


def _csv_text(columns, records):
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=columns, lineterminator="\n")
    writer.writeheader()
    writer.writerows(records)
    return buf.getvalue()


def rows_csv(rows):
    return _csv_text(RESULT_COLUMNS, [r.csv_fields() for r in rows])


def aggregate_csv(agg):
    return _csv_text(AGGREGATE_COLUMNS, [{**a, "mean_snr_db": repr(a["mean_snr_db"]),
                                          "mean_time_ms": repr(a["mean_time_ms"])} for a in agg])


def results_json(rows, agg, config):
    doc = {
        "format_version": RESULTS_FORMAT_VERSION,
        "config": config,
        "rows": [r.to_dict() for r in rows],
        "aggregate": agg,
    }
    return json.dumps(doc, indent=1, sort_keys=True) + "\n"


def read_rows_csv(text):
    """Parse a results CSV back into plain dicts with typed values (for checks and plots)."""
    out = []
    for rec in csv.DictReader(io.StringIO(text)):
        out.append({
            "format_version": int(rec["format_version"]),
            "trial": int(rec["trial"]),
            "k": int(rec["k"]),
            "method": rec["method"],
            "min_snr_db": float(rec["min_snr_db"]) if rec["min_snr_db"] else None,
            "subset": [int(i) for i in rec["subset"].split(";")] if rec["subset"] else [],
            "lambda_star": float(rec["lambda_star"]) if rec["lambda_star"] else None,
            "sca_iters": int(rec["sca_iters"]),
            "mp_iters": int(rec["mp_iters"]),
            "wall_ms": float(rec["wall_ms"]) if rec["wall_ms"] else None,
        })
    return out
