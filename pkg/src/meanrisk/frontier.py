"""Flow-at-risk versus interdiction budget.

Budgets run over ``k/K * beta_max`` where ``beta_max`` is the cheapest way
to sever the network (a min cut with interdiction costs as capacities), so
the last column always reaches zero flow. Values are scaled so that the
deterministic, uninterdicted min cut reads 100.
"""

from __future__ import annotations

import csv
import io
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from meanrisk.core import (
    Covariance,
    InterdictionSet,
    MeanRiskInstance,
    inv_normal_cdf,
    mean_risk_value,
)
from meanrisk.netflow.interdiction import max_flow_min_cut
from meanrisk.netflow.mrni import MRNIMinimizer
from meanrisk.netflow.network import Network
from meanrisk.search import SearchConfig, solve

CSV_HEADER = ("budget_fraction", "epsilon", "scaled", "raw", "iters", "wall_ms")
POOL_REL_TOL = 1e-12
BUDGET_TOL = 1e-9
THREADS_ENV = "MEANRISK_THREADS"


@dataclass(frozen=True)
class FrontierRow:
    budget_fraction: float
    epsilon: float
    scaled: float
    raw: float
    iters: int
    wall_ms: float


@dataclass(frozen=True)
class _Cell:
    epsilon: float
    k: int
    x: np.ndarray
    cost: float
    raw: float
    iters: int
    wall_ms: float


def beta_max(network: Network) -> float:
    """Minimum total interdiction cost of an s-t cut."""
    value, _ = max_flow_min_cut(network, network.full_capacities(network.costs()))
    if not math.isfinite(value):
        raise ValueError("network has an uninterdictable s-t path")
    return value


def omega_for(epsilon: float) -> float:
    if not 0.0 < epsilon <= 0.5:
        raise ValueError(f"epsilon must lie in (0, 0.5], got {epsilon}")
    return inv_normal_cdf(1.0 - epsilon)


def thread_count() -> int:
    raw = os.environ.get(THREADS_ENV, "0").strip() or "0"
    try:
        n = int(raw)
    except ValueError:
        raise ValueError(f"{THREADS_ENV} must be a non-negative integer, got {raw!r}") from None
    if n < 0:
        raise ValueError(f"{THREADS_ENV} must be a non-negative integer, got {raw!r}")
    return n


def reference_value(network: Network, cov: Covariance) -> float:
    """Deterministic min cut without interdiction: the 100 mark."""
    inst = MeanRiskInstance(network.means(), cov, 0.0, InterdictionSet(network.with_budget(0.0)))
    return solve(inst, MRNIMinimizer()).value


def frontier(
    network: Network,
    cov: Covariance,
    epsilons,
    steps: int = 20,
    config: SearchConfig | None = None,
    threads: int | None = None,
) -> list[FrontierRow]:
    """Solve every (epsilon, budget) cell and return rows sorted by (epsilon, budget).

    Each cell is first solved on its own. A pooling pass then lets every
    cell adopt any solution found elsewhere in the sweep that fits its
    budget, which makes each curve non-increasing in the budget and
    orders the curves by confidence level.
    """
    if steps < 1:
        raise ValueError("budget steps must be >= 1")
    epsilons = sorted({float(e) for e in epsilons})
    if not epsilons:
        raise ValueError("at least one epsilon is required")
    omegas = {e: omega_for(e) for e in epsilons}
    bmax = beta_max(network)
    budgets = [bmax * k / steps for k in range(steps + 1)]
    ref = reference_value(network, cov)
    if not ref > 0:
        raise ValueError("deterministic min cut is zero; nothing to scale")
    c = network.means()

    def run(eps: float, k: int) -> _Cell:
        net = network.with_budget(budgets[k])
        inst = MeanRiskInstance(c, cov, omegas[eps], InterdictionSet(net))
        t0 = time.perf_counter()
        sol = solve(inst, MRNIMinimizer(), config)
        wall = (time.perf_counter() - t0) * 1e3
        cost = sol.detail.interdiction_cost(net) if sol.detail is not None else 0.0
        return _Cell(eps, k, sol.x, cost, sol.value, sol.iterations, wall)

    jobs = [(e, k) for e in epsilons for k in range(steps + 1)]
    n_threads = thread_count() if threads is None else threads
    if n_threads > 0:
        with ThreadPoolExecutor(max_workers=n_threads) as pool:
            cells = list(pool.map(lambda job: run(*job), jobs))
    else:
        cells = [run(*job) for job in jobs]

    rows = []
    for cell in cells:
        inst = MeanRiskInstance(c, cov, omegas[cell.epsilon], InterdictionSet(network))
        best = cell.raw
        limit = budgets[cell.k] + BUDGET_TOL * max(1.0, bmax)
        for other in cells:
            if other.cost <= limit:
                v = mean_risk_value(inst, other.x)
                if v < best - POOL_REL_TOL * max(1.0, abs(best)):
                    best = v
        rows.append(FrontierRow(cell.k / steps, cell.epsilon, 100.0 * best / ref, best, cell.iters, cell.wall_ms))
    check_monotone(rows)
    return rows


def check_monotone(rows: list[FrontierRow]) -> None:
    by_eps: dict[float, list[FrontierRow]] = {}
    for r in rows:
        by_eps.setdefault(r.epsilon, []).append(r)
    for eps, series in by_eps.items():
        series.sort(key=lambda r: r.budget_fraction)
        for a, b in zip(series, series[1:]):
            if b.raw > a.raw + POOL_REL_TOL * max(1.0, abs(a.raw)):
                raise RuntimeError(f"frontier for epsilon={eps} increases at budget fraction {b.budget_fraction}")


def frontier_csv(rows: list[FrontierRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in rows:
        w.writerow([repr(r.budget_fraction), repr(r.epsilon), repr(r.scaled), repr(r.raw), r.iters, f"{r.wall_ms:.3f}"])
    return buf.getvalue()
