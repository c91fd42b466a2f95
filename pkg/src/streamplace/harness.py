"""Experiment sweeps over generated instances, and their summaries."""
from __future__ import annotations

import csv
import io
import signal
import threading
import time
from concurrent.futures import ProcessPoolExecutor
from contextlib import contextmanager
from dataclasses import dataclass, replace

from .download import SelectionFailure
from .exact import CapExceededError, solve_exact
from .instances import GeneratorConfig, generate
from .pipeline import default_selector, solve_heuristic
from .placement import HEURISTICS, HeuristicFailure

COLUMNS = ["sweep_param", "sweep_value", "seed", "heuristic", "selector", "status", "cost",
           "processors", "runtime_ms", "fail_kind"]
SWEEP_FIELDS = {"n": "max_operators", "alpha": "alpha", "frequency": "frequency", "replication": "replication"}
HEURISTIC_ORDER = ["random", "comp", "comm", "object", "subtree", "grouping", "availability"]
SEED_STRIDE = 100_000


class RunTimeout(Exception):
    pass


@contextmanager
def time_limit(seconds: float | None):
    """Raise RunTimeout after ``seconds`` of wall time (main thread only)."""
    if not seconds or threading.current_thread() is not threading.main_thread():
        yield
        return

    def on_alarm(signum, frame):
        raise RunTimeout

    previous = signal.signal(signal.SIGALRM, on_alarm)
    signal.setitimer(signal.ITIMER_REAL, seconds)
    try:
        yield
    finally:
        signal.setitimer(signal.ITIMER_REAL, 0)
        signal.signal(signal.SIGALRM, previous)


@dataclass(frozen=True)
class Row:
    sweep_param: str
    sweep_value: float
    seed: int
    heuristic: str
    selector: str
    status: str
    cost: float | None
    processors: int | None
    runtime_ms: float | None
    fail_kind: str

    def as_list(self, timing: bool = True) -> list[str]:
        return [self.sweep_param, _fmt(self.sweep_value), str(self.seed), self.heuristic, self.selector,
                self.status, _fmt(self.cost), _fmt(self.processors),
                f"{self.runtime_ms:.3f}" if timing and self.runtime_ms is not None else "", self.fail_kind]


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float) and v.is_integer():
        return str(int(v))
    return str(v)


def point_config(base: GeneratorConfig, param: str, value, point: int, trial: int) -> GeneratorConfig:
    field = SWEEP_FIELDS[param]
    if field == "max_operators":
        value = int(value)
    return replace(base, **{field: value, "seed": base.seed + point * SEED_STRIDE + trial})


def run_one(instance, heuristic: str, selector: str | None, seed: int, timeout: float | None,
            downgrade: bool = True) -> tuple[str, float | None, int | None, str, float]:
    """(status, cost, processors, fail_kind, runtime_ms) for one heuristic run."""
    start = time.perf_counter()
    try:
        with time_limit(timeout):
            sol = solve_heuristic(instance, heuristic, selector, seed, downgrade)
        status, cost, procs = ("OK", sol.total_cost, sol.processors) if sol.feasible else ("FAIL", None, None)
        kind = "" if sol.feasible else sol.violation_report[0].kind
    except HeuristicFailure:
        status, cost, procs, kind = "FAIL", None, None, "Placement"
    except SelectionFailure as exc:
        status, cost, procs, kind = "FAIL", None, None, exc.kind
    except RunTimeout:
        status, cost, procs, kind = "TIMEOUT", None, None, ""
    return status, cost, procs, kind, (time.perf_counter() - start) * 1000


def _task(args):
    param, value, cfg, heuristics, selector, timeout, exact_caps = args
    inst = generate(cfg)
    rows = []
    for h in heuristics:
        sel = selector or default_selector(h)
        status, cost, procs, kind, ms = run_one(inst, h, sel, cfg.seed, timeout)
        rows.append(Row(param, value, cfg.seed, h, sel, status, cost, procs, ms, kind))
    if exact_caps is not None:
        start = time.perf_counter()
        try:
            with time_limit(timeout):
                sol = solve_exact(inst, **exact_caps)
            if sol is None:
                status, cost, procs, kind = "FAIL", None, None, "Infeasible"
            else:
                status, cost, procs, kind = "OK", sol.total_cost, sol.processors, ""
        except CapExceededError:
            status, cost, procs, kind = "SKIP", None, None, "Cap"
        except RunTimeout:
            status, cost, procs, kind = "TIMEOUT", None, None, ""
        rows.append(Row(param, value, cfg.seed, "exact", "exhaustive", status, cost, procs,
                        (time.perf_counter() - start) * 1000, kind))
    return rows


def run_experiment(param: str, values, base: GeneratorConfig, heuristics=None, trials: int = 30,
                   selector: str | None = None, timeout: float | None = 60.0, exact_caps: dict | None = None,
                   workers: int = 1) -> list[Row]:
    """Generate ``trials`` instances per sweep point and run every heuristic.

    Trial seeds are ``base.seed + point_index * 100000 + trial``. Rows come
    back ordered by (point, trial, heuristic) whatever the worker count.
    """
    if param not in SWEEP_FIELDS:
        raise ValueError(f"unknown sweep parameter {param!r}; choose from {sorted(SWEEP_FIELDS)}")
    heuristics = list(heuristics or HEURISTIC_ORDER)
    for h in heuristics:
        if h not in HEURISTICS:
            raise ValueError(f"unknown heuristic {h!r}")
    tasks = [(param, v, point_config(base, param, v, p, t), heuristics, selector, timeout, exact_caps)
             for p, v in enumerate(values) for t in range(trials)]
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(_task, tasks))
    else:
        chunks = [_task(t) for t in tasks]
    return [row for chunk in chunks for row in chunk]


def write_csv(rows, stream, timing: bool = False) -> None:
    out = csv.writer(stream, lineterminator="\n")
    out.writerow(COLUMNS)
    for r in rows:
        out.writerow(r.as_list(timing))


def rows_to_csv(rows, timing: bool = False) -> str:
    buf = io.StringIO()
    write_csv(rows, buf, timing)
    return buf.getvalue()


def read_csv(stream) -> list[Row]:
    rows = []
    for rec in csv.DictReader(stream):
        rows.append(Row(
            rec["sweep_param"], float(rec["sweep_value"]), int(rec["seed"]), rec["heuristic"], rec["selector"],
            rec["status"], float(rec["cost"]) if rec["cost"] else None,
            int(rec["processors"]) if rec["processors"] else None,
            float(rec["runtime_ms"]) if rec["runtime_ms"] else None, rec["fail_kind"],
        ))
    return rows


@dataclass(frozen=True)
class HeuristicStats:
    sweep_value: float
    heuristic: str
    runs: int
    successes: int
    mean_cost: float | None
    wins: dict

    @property
    def success_rate(self) -> float:
        return self.successes / self.runs if self.runs else 0.0


def summarize(rows) -> dict[float, list[HeuristicStats]]:
    """Per sweep point: heuristics ranked by mean cost over their successful
    runs (never-successful ones last), with success rates and pairwise wins.

    ``wins[other]`` counts trials where both succeeded and this heuristic
    was strictly cheaper.
    """
    points: dict[float, dict[str, list[Row]]] = {}
    for r in rows:
        points.setdefault(r.sweep_value, {}).setdefault(r.heuristic, []).append(r)
    report = {}
    for value in sorted(points):
        per = points[value]
        cost_by = {h: {r.seed: r.cost for r in rs if r.status == "OK"} for h, rs in per.items()}
        stats = []
        for h, rs in per.items():
            ok = [r.cost for r in rs if r.status == "OK"]
            wins = {}
            for other in per:
                if other != h:
                    wins[other] = sum(1 for s, c in cost_by[h].items()
                                      if s in cost_by[other] and c < cost_by[other][s])
            stats.append(HeuristicStats(value, h, len(rs), len(ok), sum(ok) / len(ok) if ok else None, wins))
        stats.sort(key=lambda s: (s.mean_cost is None, s.mean_cost or 0.0, s.heuristic))
        report[value] = stats
    return report


def summary_csv(report) -> str:
    buf = io.StringIO()
    out = csv.writer(buf, lineterminator="\n")
    names = sorted({s.heuristic for stats in report.values() for s in stats})
    out.writerow(["sweep_value", "rank", "heuristic", "runs", "successes", "success_rate", "mean_cost"]
                 + [f"wins_vs_{n}" for n in names])
    for value, stats in report.items():
        for rank, s in enumerate(stats, 1):
            out.writerow([_fmt(value), rank, s.heuristic, s.runs, s.successes, f"{s.success_rate:.4f}",
                          "" if s.mean_cost is None else f"{s.mean_cost:.4f}"]
                         + ["" if n == s.heuristic else s.wins.get(n, 0) for n in names])
    return buf.getvalue()
