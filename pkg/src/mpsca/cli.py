"""Command-line entry point: ``mpsca {gen,solve,bench,oracle}``."""

import argparse
import json
import logging
import math
import os
import sys
import time
from dataclasses import asdict
from pathlib import Path

from mpsca import __version__
from mpsca.bench import (
    RESULTS_FORMAT_VERSION, ExperimentConfig, ResultRow, aggregate, aggregate_csv,
    results_json, rows_csv, run_bench,
)
from mpsca.channelgen import ChannelModelConfig, draw_instance
from mpsca.instance_io import InstanceFormatError, load_instance, save_instance
from mpsca.oracle import DEFAULT_SUBSET_CAP, oracle
from mpsca.selection import LAMBDA_RULES, PROBE_INITS, BisectionConfig, ScaConfig, solve_joint

log = logging.getLogger("mpsca")

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_PARSE = 3
EXIT_RUNTIME = 4

WORKERS_ENV = "MPSCA_WORKERS"

DEFAULTS = {
    "n": 30,
    "m": 50,
    "k": None,
    "power": 10.0,
    "noise_var": 1.0,
    "trials": 200,
    "seed": 0,
    "sca_iters": 10,
    "mp_iters": 1000,
    "lambda_lb": 0.0,
    "lambda_ub": 2.0,
    "tau_rel": 1e-3,
    "lambda_rule": "snr",
    "reweight_eps": 0.2,
    "probe_restarts": 1,
    "probe_init": "dense",
    "max_depth": 30,
    "gap_every": 25,
    "step_safety": 1.0,
    "restarts": None,  # 3 for the re-solve, 5 for the oracle
    "oracle_restarts": 5,
    "cap": DEFAULT_SUBSET_CAP,
    "workers": None,
    "out": None,
    "format": None,
    "oracle": False,
    "plot": True,
    "timing": True,
}


class UsageError(ValueError):
    """Bad flag or config value."""


def parse_k(text):
    """``"5"``, ``"5,10,20"`` or an inclusive range ``"2:6"`` / ``"2:20:2"``."""
    out = []
    try:
        for part in str(text).split(","):
            part = part.strip()
            if ":" in part:
                bits = [int(b) for b in part.split(":")]
                if len(bits) not in (2, 3):
                    raise ValueError
                lo, hi, step = bits[0], bits[1], bits[2] if len(bits) == 3 else 1
                if step < 1 or hi < lo:
                    raise ValueError
                out.extend(range(lo, hi + 1, step))
            else:
                out.append(int(part))
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid K specification {text!r}") from None
    return out


def _eps(text):
    return None if str(text).lower() == "none" else float(text)


def _add_solver_flags(p):
    g = p.add_argument_group("solver")
    g.add_argument("--sca-iters", type=int)
    g.add_argument("--mp-iters", type=int)
    g.add_argument("--lambda-lb", type=float)
    g.add_argument("--lambda-ub", type=float)
    g.add_argument("--tau-rel", type=float)
    g.add_argument("--lambda-rule", choices=LAMBDA_RULES)
    g.add_argument("--reweight-eps", type=_eps, help="group reweighting offset, or 'none'")
    g.add_argument("--probe-restarts", type=int)
    g.add_argument("--probe-init", choices=PROBE_INITS)
    g.add_argument("--max-depth", type=int)
    g.add_argument("--gap-every", type=int)
    g.add_argument("--step-safety", type=float)
    g.add_argument("--seed", type=int)


def _add_scenario_flags(p):
    g = p.add_argument_group("scenario")
    g.add_argument("--n", type=int)
    g.add_argument("--m", type=int)
    g.add_argument("--power", type=float)
    g.add_argument("--noise-var", type=float)
    g.add_argument("--trials", type=int)


def _add_output_flags(p, formats_repeat=False):
    p.add_argument("--out")
    if formats_repeat:
        p.add_argument("--format", choices=("csv", "json"), action="append",
                       help="repeatable; default writes both")
    else:
        p.add_argument("--format", choices=("csv", "json"))
    p.add_argument("--no-timing", dest="timing", action="store_false", default=None,
                   help="report wall_ms as 0 so reruns are byte-identical")


def build_parser():
    parser = argparse.ArgumentParser(prog="mpsca", description=__doc__)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--config", help="JSON file of flag values (flags override it)")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="draw instances and write one file per trial")
    _add_scenario_flags(gen)
    gen.add_argument("--seed", type=int)
    gen.add_argument("--out", help="output directory (default: instances)")

    solve = sub.add_parser("solve", help="joint antenna selection and beamforming on one instance")
    solve.add_argument("instance")
    solve.add_argument("--k", type=parse_k, action="append")
    solve.add_argument("--restarts", type=int)
    _add_solver_flags(solve)
    _add_output_flags(solve)

    bench = sub.add_parser("bench", help="Monte-Carlo sweep over K")
    _add_scenario_flags(bench)
    bench.add_argument("--k", type=parse_k, action="append")
    bench.add_argument("--restarts", type=int)
    bench.add_argument("--workers", type=int)
    bench.add_argument("--oracle", action="store_true", default=None, help="add exhaustive-oracle rows")
    bench.add_argument("--oracle-restarts", type=int)
    bench.add_argument("--no-plot", dest="plot", action="store_false", default=None)
    _add_solver_flags(bench)
    _add_output_flags(bench, formats_repeat=True)

    orc = sub.add_parser("oracle", help="exhaustive (or analytic, M=1) reference solution")
    orc.add_argument("instance")
    orc.add_argument("--k", type=parse_k, action="append")
    orc.add_argument("--restarts", type=int)
    orc.add_argument("--cap", type=int)
    orc.add_argument("--workers", type=int)
    _add_solver_flags(orc)
    _add_output_flags(orc)
    return parser


def load_config_file(path):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise OSError(f"cannot read config file {path}: {exc.strerror}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InstanceFormatError(f"{path}: line {exc.lineno} column {exc.colno} (offset {exc.pos}): {exc.msg}") from None
    if not isinstance(doc, dict):
        raise InstanceFormatError(f"{path}: config must be a JSON object")
    unknown = sorted(set(doc) - set(DEFAULTS))
    if unknown:
        raise UsageError(f"{path}: unknown config key(s) {', '.join(unknown)}")
    return doc


def effective_settings(args):
    """Defaults, then the config file, then explicit flags."""
    eff = dict(DEFAULTS)
    if args.config:
        eff.update(load_config_file(args.config))
    for key in DEFAULTS:
        val = getattr(args, key, None)
        if val is not None:
            eff[key] = val
    if eff["workers"] is None:
        env = os.environ.get(WORKERS_ENV)
        try:
            eff["workers"] = int(env) if env else 1
        except ValueError:
            raise UsageError(f"{WORKERS_ENV}={env!r} is not an integer") from None
    if eff["workers"] < 1:
        raise UsageError("workers must be >= 1")
    k = eff["k"]
    if k is not None:
        flat = []
        for item in k if isinstance(k, list) else [k]:
            flat.extend(item if isinstance(item, list) else parse_k(item))
        eff["k"] = sorted(set(flat))
    return eff


def sca_config(eff, restarts_default=3):
    restarts = eff["restarts"] if eff["restarts"] is not None else restarts_default
    return ScaConfig(
        sca_iters=eff["sca_iters"], mp_iters=eff["mp_iters"], tau_rel=eff["tau_rel"],
        seed=eff["seed"], gap_every=eff["gap_every"], step_safety=eff["step_safety"],
        restarts=restarts,
    )


def bisection_config(eff):
    return BisectionConfig(
        lambda_lb=eff["lambda_lb"], lambda_ub=eff["lambda_ub"], max_depth=eff["max_depth"],
        rule=eff["lambda_rule"], reweight_eps=eff["reweight_eps"],
        probe_restarts=eff["probe_restarts"], init=eff["probe_init"],
    )


def _single_k(eff, n):
    ks = eff["k"]
    if not ks:
        raise UsageError("--k is required")
    bad = [k for k in ks if not 1 <= k <= n]
    if bad:
        raise UsageError(f"K={bad[0]} is infeasible for an instance with N={n} antennas")
    return ks


def _emit(text, out):
    if out is None:
        sys.stdout.write(text)
        return
    path = Path(out)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)
    log.info("wrote %s", path)


def cmd_gen(eff):
    if eff["trials"] < 1:
        raise UsageError(f"trials must be >= 1, got {eff['trials']}")
    cfg = ChannelModelConfig(eff["n"], eff["m"], noise_var=eff["noise_var"], seed=eff["seed"])
    out = Path(eff["out"] or "instances")
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {out}: {exc.strerror}") from exc
    paths = []
    for t in range(eff["trials"]):
        inst = draw_instance(cfg, power=eff["power"], trial=t)
        generator = {"seed": eff["seed"], "trial": t, "config": asdict(cfg), "version": __version__}
        paths.append(save_instance(out / f"instance_{t:04d}.json", inst, generator))
    for p in paths:
        print(p)
    return EXIT_OK


# Settings that do not apply to a subcommand are left out of its metadata.
_IRRELEVANT = {
    "solve": {"n", "m", "power", "noise_var", "trials", "plot", "oracle", "oracle_restarts", "cap", "workers"},
    "oracle": {"n", "m", "power", "noise_var", "trials", "plot", "oracle", "lambda_lb", "lambda_ub",
               "lambda_rule", "reweight_eps", "probe_restarts", "probe_init", "max_depth"},
    "bench": {"cap"},
}


def _meta(command, eff):
    drop = _IRRELEVANT.get(command, set())
    return {"command": command, "version": __version__,
            "settings": {k: v for k, v in eff.items() if k not in drop}}


def _result_doc(command, eff, rows, extra):
    doc = {
        "format_version": RESULTS_FORMAT_VERSION,
        "config": _meta(command, eff),
        "rows": [r.to_dict() for r in rows],
    }
    doc.update(extra)
    return json.dumps(doc, indent=1, sort_keys=True) + "\n"


def cmd_solve(eff, instance):
    inst = load_instance(instance)
    ks = _single_k(eff, inst.n_antennas)
    sca, bis = sca_config(eff), bisection_config(eff)
    rows, results = [], []
    for k in ks:
        t0 = time.perf_counter()
        res = solve_joint(inst, k, sca, bis)
        ms = (time.perf_counter() - t0) * 1e3 if eff["timing"] else 0.0
        rows.append(ResultRow(0, k, "spmp-sca", res.min_snr_db, tuple(int(a) for a in res.antennas),
                              res.lam_star, res.sca_iterations, res.mp_iterations, ms, res.exact))
        results.append(res.to_dict(eff["timing"]))
    if eff["format"] == "csv":
        _emit(rows_csv(rows), eff["out"])
    else:
        _emit(_result_doc("solve", {**eff, "instance": str(instance)}, rows, {"results": results}), eff["out"])
    return EXIT_OK


def cmd_oracle(eff, instance):
    inst = load_instance(instance)
    ks = _single_k(eff, inst.n_antennas)
    sca = sca_config(eff)
    restarts = eff["restarts"] if eff["restarts"] is not None else eff["oracle_restarts"]
    rows, paths = [], []
    for k in ks:
        t0 = time.perf_counter()
        res = oracle(inst, k, sca, restarts=restarts, cap=eff["cap"], workers=eff["workers"])
        ms = (time.perf_counter() - t0) * 1e3 if eff["timing"] else 0.0
        rows.append(ResultRow(0, k, "oracle", res.min_snr_db, tuple(res.subset), math.nan,
                              res.sca_iterations, res.mp_iterations, ms))
        paths.append({"k": k, "path": res.method, "subsets_evaluated": len(res.per_subset) or 1})
    if eff["format"] == "csv":
        _emit(rows_csv(rows), eff["out"])
    else:
        _emit(_result_doc("oracle", {**eff, "instance": str(instance)}, rows, {"oracle": paths}), eff["out"])
    return EXIT_OK


def cmd_bench(eff):
    ks = eff["k"] or [5, 10, 20]
    cfg = ExperimentConfig(
        n=eff["n"], m=eff["m"], power=eff["power"], noise_var=eff["noise_var"], ks=tuple(ks),
        trials=eff["trials"], seed=eff["seed"],
        methods=("spmp-sca", "oracle") if eff["oracle"] else ("spmp-sca",),
        oracle_restarts=eff["oracle_restarts"], sca=sca_config(eff), bisection=bisection_config(eff),
        timing=eff["timing"],
    )
    formats = eff["format"] or ["csv", "json"]
    formats = [formats] if isinstance(formats, str) else formats
    out = Path(eff["out"] or "bench_out")
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {out}: {exc.strerror}") from exc

    rows = run_bench(cfg, workers=eff["workers"])
    agg = aggregate(rows)
    failed = sum(r.error is not None for r in rows)
    if failed:
        log.warning("%d of %d rows failed; see the error field in results.json", failed, len(rows))
    meta = {**_meta("bench", eff), "experiment": cfg.to_dict()}
    if "csv" in formats:
        (out / "results.csv").write_text(rows_csv(rows))
        (out / "aggregate.csv").write_text(aggregate_csv(agg))
    if "json" in formats:
        (out / "results.json").write_text(results_json(rows, agg, meta))
    if eff["plot"]:
        from mpsca.plotting import plot_aggregate
        plot_aggregate(agg, out, timing=eff["timing"])
    for a in agg:
        print(f"K={a['k']:<3d} {a['method']:<9s} mean_snr_db={a['mean_snr_db']:.4f} "
              f"mean_time_ms={a['mean_time_ms']:.1f} rows={a['rows']}")
    return EXIT_OK


def run(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_VALIDATION
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        eff = effective_settings(args)
        if args.command == "gen":
            return cmd_gen(eff)
        if args.command == "solve":
            return cmd_solve(eff, args.instance)
        if args.command == "oracle":
            return cmd_oracle(eff, args.instance)
        return cmd_bench(eff)
    except InstanceFormatError as exc:
        print(f"mpsca: parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except ValueError as exc:  # includes UsageError and SubsetCapExceeded
        print(f"mpsca: invalid input: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except Exception as exc:
        print(f"mpsca: error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


def main(argv=None):
    sys.exit(run(argv))
