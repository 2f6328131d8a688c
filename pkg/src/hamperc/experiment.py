"""Parameter sweeps comparing simulated census data with the predictions.

Every (point, replicate) pair gets its own seed derived from the plan seed,
so rows do not depend on the worker pool size or completion order.
"""

from __future__ import annotations

import csv
import io
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import stats

from . import theory
from .components import connected_components
from .jsonio import dumps
from .sampler import c_log_to_p, lambda_to_p, sample
from .torus import make_spec

REGIMES = ("lambda", "log")

COLUMNS = [
    "point", "replicate", "seed", "d", "a", "n", "L", "regime", "value", "lambda", "p",
    "occupied_count", "component_count", "largest", "second_largest", "isolated_count",
    "is_connected", "isolated_or_giant", "largest_over_log_n", "largest_normalized",
    "lambda_c", "giant_fraction_theory", "c_conn", "c_iso_giant",
]


class PlanError(ValueError):
    """Invalid sweep configuration."""


@dataclass(frozen=True)
class SweepPlan:
    d: int
    a: tuple[float, ...]
    n: tuple[int, ...]
    regime: str
    values: tuple[float, ...]
    replicates: int = 1
    seed: int = 0
    out: str | None = None
    timing: bool = False
    histograms: bool = False

    def __post_init__(self):
        if self.regime not in REGIMES:
            raise PlanError(f"regime must be one of {REGIMES}, got {self.regime!r}")
        if len(self.a) != self.d:
            raise PlanError(f"expected {self.d} aspect ratios, got {len(self.a)}")
        if not self.n or not self.values:
            raise PlanError("plan needs at least one n and one value")
        if self.replicates < 1:
            raise PlanError("replicates must be >= 1")

    def points(self) -> list[tuple[int, float]]:
        return [(n, v) for n in self.n for v in self.values]


def derive_seed(seed: int, point: int, replicate: int) -> int:
    ss = np.random.SeedSequence(int(seed), spawn_key=(point, replicate))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


# --- config files -----------------------------------------------------------

_KEYS = {"d", "a", "n", "regime", "values", "replicates", "seed", "out", "timing", "histograms"}


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(x) for x in text.replace(",", " ").split())


def _ints(text: str) -> tuple[int, ...]:
    return tuple(int(x) for x in text.replace(",", " ").split())


def _bool(text) -> bool:
    if isinstance(text, bool):
        return text
    return str(text).strip().lower() in ("1", "true", "yes", "on")


def parse_config(text: str) -> dict:
    """Read ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            key, _, value = line.partition(" ")
        key = key.strip()
        if key not in _KEYS:
            raise PlanError(f"line {lineno}: unknown key {key!r}")
        out[key] = value.strip()
    return out


def plan_from_mapping(raw: dict) -> SweepPlan:
    """Build a plan from string (config file) or typed (CLI) values."""
    try:
        d = int(raw["d"])
        a = raw.get("a", "1 " * d)
        a = _floats(a) if isinstance(a, str) else tuple(float(x) for x in a)
        n = raw["n"]
        n = _ints(n) if isinstance(n, str) else tuple(int(x) for x in np.atleast_1d(n))
        values = raw["values"]
        values = _floats(values) if isinstance(values, str) else tuple(float(x) for x in values)
        regime = str(raw.get("regime", "lambda")).strip()
        if regime == "lambda-scale":
            regime = "lambda"
        elif regime == "log-scale":
            regime = "log"
        return SweepPlan(
            d=d, a=a, n=n, regime=regime, values=values,
            replicates=int(raw.get("replicates", 1)),
            seed=int(raw.get("seed", 0)),
            out=raw.get("out") or None,
            timing=_bool(raw.get("timing", False)),
            histograms=_bool(raw.get("histograms", False)),
        )
    except KeyError as exc:
        raise PlanError(f"missing key {exc.args[0]!r}") from None
    except (TypeError, ValueError) as exc:
        if isinstance(exc, PlanError):
            raise
        raise PlanError(str(exc)) from None


# --- running ----------------------------------------------------------------

@dataclass
class _Job:
    point: int
    replicate: int
    n: int
    value: float
    seed: int
    row: dict = field(default_factory=dict)
    histogram: list = field(default_factory=list)


def _theory_columns(plan: SweepPlan, lam: float) -> dict:
    if plan.d < 2:
        nan = float("nan")
        return {"lambda_c": nan, "giant_fraction_theory": nan, "c_conn": nan, "c_iso_giant": nan}
    c_conn, c_iso = theory.connectivity_thresholds(plan.a)
    giant = 0.0
    if lam > 0:
        _, q = theory.extinction(lam, plan.a)
        giant = 1.0 - q
    return {
        "lambda_c": theory.critical_lambda(plan.a),
        "giant_fraction_theory": giant,
        "c_conn": c_conn,
        "c_iso_giant": c_iso,
    }


def _run_one(plan: SweepPlan, job: _Job, theory_cache: dict) -> _Job:
    start = time.perf_counter()
    spec = make_spec(plan.d, plan.a, job.n)
    if plan.regime == "lambda":
        p = lambda_to_p(spec, job.value)
    else:
        p = c_log_to_p(spec, job.value)
    lam = p * spec.n
    cfg = sample(spec, p, job.seed)
    st = connected_components(cfg)
    norm = lam * math.prod(spec.a) * spec.n ** (spec.d - 1)
    log_n = math.log(spec.n)
    row = {
        "point": job.point,
        "replicate": job.replicate,
        "seed": job.seed,
        "d": spec.d,
        "a": " ".join(repr(x) for x in spec.a),
        "n": spec.n,
        "L": " ".join(str(x) for x in spec.L),
        "regime": plan.regime,
        "value": job.value,
        "lambda": lam,
        "p": p,
        "occupied_count": st.occupied_count,
        "component_count": st.component_count,
        "largest": st.largest,
        "second_largest": st.second_largest,
        "isolated_count": st.isolated_count,
        "is_connected": int(st.is_connected),
        "isolated_or_giant": int(st.isolated_or_giant),
        "largest_over_log_n": st.largest / log_n if log_n > 0 else float("nan"),
        "largest_normalized": st.largest / norm if norm > 0 else float("nan"),
    }
    row.update(theory_cache[(job.n, job.value)])
    if plan.timing:
        row["wall_time"] = time.perf_counter() - start
    job.row = row
    if plan.histograms:
        job.histogram = st.histogram()
    return job


def run_sweep(plan: SweepPlan, workers: int = 1) -> list[dict]:
    """Simulate every (point, replicate) of ``plan``; rows come back in
    canonical order whatever the pool size."""
    jobs = [
        _Job(pi, r, n, v, derive_seed(plan.seed, pi, r))
        for pi, (n, v) in enumerate(plan.points())
        for r in range(plan.replicates)
    ]
    # validates p at every point before any simulation; workers only read it
    cache: dict = {}
    for n, v in plan.points():
        spec = make_spec(plan.d, plan.a, n)
        p = lambda_to_p(spec, v) if plan.regime == "lambda" else c_log_to_p(spec, v)
        cache[(n, v)] = _theory_columns(plan, p * spec.n)
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            done = list(pool.map(lambda j: _run_one(plan, j, cache), jobs))
    else:
        done = [_run_one(plan, j, cache) for j in jobs]
    return [j.row | ({"histogram": j.histogram} if plan.histograms else {}) for j in done]


# --- reporting --------------------------------------------------------------

def _fmt(x) -> str:
    if isinstance(x, float):
        return format(x, ".17g")
    return str(x)


def rows_to_csv(rows: list[dict]) -> str:
    cols = list(COLUMNS)
    if rows and "wall_time" in rows[0]:
        cols.append("wall_time")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(cols)
    for row in rows:
        w.writerow([_fmt(row[c]) for c in cols])
    return buf.getvalue()


def histograms_to_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(["point", "replicate", "size", "count"])
    for row in rows:
        for size, count in row.get("histogram", []):
            w.writerow([row["point"], row["replicate"], size, count])
    return buf.getvalue()


def _mean_ci(x: np.ndarray, level: float = 0.95) -> tuple[float, float, float]:
    m = float(x.mean())
    if x.size < 2:
        return m, m, m
    half = float(stats.t.ppf(0.5 + level / 2, x.size - 1) * x.std(ddof=1) / math.sqrt(x.size))
    return m, m - half, m + half


def compare_report(rows: list[dict]) -> list[dict]:
    """Per-point summary: mean and 95% t-interval of the normalized largest
    component, its distance from the predicted giant fraction, and the
    connected / has-isolated frequencies."""
    by_point: dict[int, list[dict]] = {}
    for row in rows:
        by_point.setdefault(row["point"], []).append(row)
    out = []
    for point in sorted(by_point):
        rs = by_point[point]
        g = np.array([r["largest_normalized"] for r in rs], dtype=float)
        mean, lo, hi = _mean_ci(g)
        theory_g = rs[0]["giant_fraction_theory"]
        out.append({
            "point": point,
            "n": rs[0]["n"],
            "regime": rs[0]["regime"],
            "value": rs[0]["value"],
            "lambda": rs[0]["lambda"],
            "replicates": len(rs),
            "giant_mean": mean,
            "giant_ci_low": lo,
            "giant_ci_high": hi,
            "giant_fraction_theory": theory_g,
            "giant_abs_deviation": abs(mean - theory_g),
            "fraction_connected": float(np.mean([r["is_connected"] for r in rs])),
            "fraction_with_isolated": float(np.mean([r["isolated_count"] > 0 for r in rs])),
            "fraction_isolated_or_giant": float(np.mean([r["isolated_or_giant"] for r in rs])),
            "max_second_over_log_n": max(r["second_largest"] for r in rs) / math.log(rs[0]["n"])
            if rs[0]["n"] > 1 else float("nan"),
        })
    return out


def write_outputs(plan: SweepPlan, rows: list[dict], out: str | Path) -> dict[str, Path]:
    """Write ``<out>.csv``, ``<out>.json`` and, if enabled,
    ``<out>.hist.csv``."""
    out = Path(out)
    out.parent.mkdir(parents=True, exist_ok=True)
    paths = {"csv": out.with_suffix(".csv"), "json": out.with_suffix(".json")}
    paths["csv"].write_bytes(rows_to_csv(rows).encode())
    summary = {"plan": _plan_dict(plan), "points": compare_report(rows)}
    paths["json"].write_text(dumps(summary) + "\n")
    if plan.histograms:
        paths["hist"] = out.with_suffix(".hist.csv")
        paths["hist"].write_bytes(histograms_to_csv(rows).encode())
    return paths


def _plan_dict(plan: SweepPlan) -> dict:
    return {
        "d": plan.d, "a": list(plan.a), "n": list(plan.n), "regime": plan.regime,
        "values": list(plan.values), "replicates": plan.replicates, "seed": plan.seed,
    }

