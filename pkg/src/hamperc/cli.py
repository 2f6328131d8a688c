"""Command line entry point: ``hamperc {theory,simulate,census,sweep,branching}``.

Exit status is 0 on success, 2 for invalid arguments or configuration and 3
for failures while running.
"""

from __future__ import annotations

import argparse
import csv
import io
import sys
from pathlib import Path

import numpy as np

from . import branching, theory
from .components import connected_components
from .experiment import compare_report, parse_config, plan_from_mapping, rows_to_csv, run_sweep, write_outputs
from .jsonio import dumps
from .sampler import c_log_to_p, default_workers, lambda_to_p, read_config, sample, write_config
from .torus import make_spec

EXIT_CONFIG = 2
EXIT_RUNTIME = 3


class ConfigError(Exception):
    pass


def _aspect(args) -> tuple[int, list[float]]:
    a = _floats(" ".join(args.a)) if args.a else None
    d = args.d if args.d is not None else (len(a) if a else None)
    if d is None:
        raise ConfigError("give --d or --a")
    if not a:
        a = [1.0] * d
    if len(a) != d:
        raise ConfigError(f"--a has {len(a)} entries but d = {d}")
    return d, a


def census_csv(stats) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(["size", "count"])
    w.writerows(stats.histogram())
    return buf.getvalue()


def cmd_theory(args) -> int:
    d, a = _aspect(args)
    if d < 2:
        raise ConfigError("theory needs d >= 2")
    out = theory.theory_report(a, args.lam).to_dict()
    if args.n is not None and args.lam > out["lambda_c"]:
        giant, norm = theory.giant_size_prediction(make_spec(d, a, args.n), args.lam)
        out["giant_size"] = giant
        out["expected_occupied"] = norm
    if args.lam < out["lambda_c"]:
        tc = theory.tail_constants(args.lam, a)
        out["tail"] = {"alpha": tc.alpha, "theta_star": tc.theta_star, "C": tc.C, "mu": tc.mu}
    print(dumps(out))
    return 0


def _probability(spec, args) -> float:
    if (args.lam is None) == (args.c is None):
        raise ConfigError("give exactly one of --lam or --c")
    if args.lam is not None:
        return lambda_to_p(spec, args.lam)
    return c_log_to_p(spec, args.c)


def cmd_simulate(args) -> int:
    d, a = _aspect(args)
    spec = make_spec(d, a, args.n)
    p = _probability(spec, args)
    cfg = sample(spec, p, args.seed, workers=default_workers())
    st = connected_components(cfg)
    if args.dump:
        with open(args.dump, "wb") as fh:
            write_config(cfg, fh)
    if args.census_csv:
        Path(args.census_csv).write_text(census_csv(st), newline="")
    out = {"d": d, "a": list(spec.a), "n": spec.n, "L": list(spec.L), "p": p, "lambda": p * spec.n, "seed": args.seed}
    out.update(st.summary())
    out["isolated_or_giant"] = st.isolated_or_giant
    print(dumps(out))
    return 0


def cmd_census(args) -> int:
    with open(args.file, "rb") as fh:
        cfg = read_config(fh)
    st = connected_components(cfg)
    if args.csv:
        Path(args.csv).write_text(census_csv(st), newline="")
    out = {"L": list(cfg.spec.L), "p": cfg.p, "seed": cfg.seed}
    out.update(st.summary())
    print(dumps(out))
    return 0


def cmd_sweep(args) -> int:
    raw = parse_config(Path(args.config).read_text()) if args.config else {}
    for key in ("d", "a", "n", "regime", "values", "replicates", "seed", "out"):
        val = getattr(args, key)
        if isinstance(val, list):
            val = " ".join(val)
        if val is not None:
            raw[key] = val
    if args.timing:
        raw["timing"] = True
    if args.histograms:
        raw["histograms"] = True
    if "d" not in raw and "a" in raw:
        a = raw["a"]
        raw["d"] = len(a.replace(",", " ").split()) if isinstance(a, str) else len(a)
    plan = plan_from_mapping(raw)
    workers = args.threads or default_workers()
    rows = run_sweep(plan, workers=workers)
    if plan.out:
        paths = write_outputs(plan, rows, plan.out)
        print(dumps({k: str(v) for k, v in paths.items()}))
    else:
        sys.stdout.write(rows_to_csv(rows))
        if args.report:
            sys.stderr.write(dumps(compare_report(rows)) + "\n")
    return 0


def _start(text: str):
    if text == branching.SPECIAL:
        return text
    parts = text.replace(",", " ").split()
    if len(parts) == 1:
        return int(parts[0])
    return [int(x) for x in parts]


def cmd_branching(args) -> int:
    d, a = _aspect(args)
    if args.law == "binomial" and args.n is None:
        raise ConfigError("binomial law needs --n")
    law = branching.OffspringLaw(args.law, args.lam, tuple(a), n=args.n)
    start = _start(args.start)
    branching.start_state(law, start)
    sizes, exceeded = branching.progeny_sizes(law, start, args.trials, args.cap, args.seed,
                                              workers=default_workers())
    surv = float(exceeded.mean())
    finished = sizes[~exceeded]
    out = {
        "law": args.law, "lambda": args.lam, "a": list(law.a), "n": args.n, "start": args.start,
        "trials": args.trials, "cap": args.cap, "seed": args.seed,
        "survival": surv,
        "survival_se": float(np.sqrt(surv * (1 - surv) / args.trials)),
        "mean_finite_size": float(finished.mean()) if finished.size else float("nan"),
    }
    if d >= 2 and args.lam > 0:
        q_vec, q = theory.extinction(args.lam, a)
        out["theory_q_vec"] = q_vec
        out["theory_q"] = q
    if args.csv:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\r\n")
        w.writerow(["trial", "size", "exceeded"])
        w.writerows((i, int(s), int(e)) for i, (s, e) in enumerate(zip(sizes, exceeded)))
        Path(args.csv).write_text(buf.getvalue(), newline="")
    print(dumps(out))
    return 0


def _floats(text: str) -> list[float]:
    return [float(x) for x in text.replace(",", " ").split()]


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="hamperc", description="Site percolation on Hamming tori.")
    sub = ap.add_subparsers(dest="command", required=True)

    def shape(p, need_n=False):
        p.add_argument("--d", type=int)
        p.add_argument("--a", nargs="+", help="aspect ratios, e.g. '1,1' or '1 1'")
        p.add_argument("--n", type=int, required=need_n)

    p = sub.add_parser("theory", help="predictions for (a, lambda) as JSON")
    shape(p)
    p.add_argument("--lam", type=float, required=True)
    p.set_defaults(func=cmd_theory)

    p = sub.add_parser("simulate", help="sample one configuration and print its census")
    shape(p, need_n=True)
    p.add_argument("--lam", type=float)
    p.add_argument("--c", type=float, help="p = c ln(n) / n")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--dump", help="write occupancy as an HTPC binary file")
    p.add_argument("--census-csv", help="write (size, count) census CSV")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("census", help="census of a dumped HTPC occupancy file")
    p.add_argument("file")
    p.add_argument("--csv")
    p.set_defaults(func=cmd_census)

    p = sub.add_parser("sweep", help="replicated parameter sweep")
    p.add_argument("--config", help="flat key = value plan file")
    p.add_argument("--d", type=int)
    p.add_argument("--a", nargs="+")
    p.add_argument("--n", nargs="+")
    p.add_argument("--regime", choices=["lambda", "log", "lambda-scale", "log-scale"])
    p.add_argument("--values", nargs="+")
    p.add_argument("--replicates", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="output prefix for .csv/.json")
    p.add_argument("--threads", type=int, help="worker pool size (default HTPC_THREADS)")
    p.add_argument("--timing", action="store_true", help="add a wall_time column")
    p.add_argument("--histograms", action="store_true", help="write per-row size histograms")
    p.add_argument("--report", action="store_true", help="print the summary to stderr")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("branching", help="Monte Carlo total progeny of the branching process")
    shape(p)
    p.add_argument("--law", choices=["poisson", "binomial"], default="poisson")
    p.add_argument("--lam", type=float, required=True)
    p.add_argument("--start", default=branching.SPECIAL, help="'special', a type 1..d, or a count vector")
    p.add_argument("--trials", type=int, default=10_000)
    p.add_argument("--cap", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--csv", help="write per-trial sizes")
    p.set_defaults(func=cmd_branching)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ValueError) as exc:  # PlanError is a ValueError
        print(f"hamperc: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001
        print(f"hamperc: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
