"""Binary local search over t on the perspective upper bound ``f(t)``.

Each iteration evaluates ``f`` at the bracket midpoint and moves toward the
side where ``g(x(t), .)`` decreases. Local minima of ``f`` are exactly the
points where the surrogate touches the mean-risk objective, so the search
stops there, or earlier once the relative gap between ``f(t)`` and the
mean-risk value of ``x(t)`` is small enough.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from meanrisk.core import (
    ExplicitSet,
    MeanRiskInstance,
    Solution,
    dg_dt,
    make_solution,
    mean_risk_value,
    surrogate_g,
)
from meanrisk.errors import CapacityError
from meanrisk.oracle import ENUMERATION_LIMIT, InnerMinimizer, evaluate_f

TRACE_HEADER = ("iteration", "t", "f", "mr", "sign")


@dataclass(frozen=True)
class SearchConfig:
    """Stopping rules. ``None`` picks the instance-scaled default.

    ``derivative_eps`` defaults to ``0.5e-6 * omega``, i.e. 1e-6 on the
    unscaled derivative ``1 - x'Qx/t**2``; ``bracket_tol`` defaults to
    ``1e-9 * t_max``.
    """

    derivative_eps: float | None = None
    gap_tol: float = 0.01
    max_iters: int = 64
    bracket_tol: float | None = None

    def __post_init__(self):
        if self.derivative_eps is not None and not self.derivative_eps > 0:
            raise ValueError("derivative_eps must be > 0")
        if not 0 < self.gap_tol < 1:
            raise ValueError("gap_tol must lie in (0, 1)")
        if not (isinstance(self.max_iters, (int, np.integer)) and self.max_iters > 0):
            raise ValueError("max_iters must be a positive integer")
        if self.bracket_tol is not None and not self.bracket_tol > 0:
            raise ValueError("bracket_tol must be > 0")


@dataclass(frozen=True)
class TraceRow:
    iteration: int
    t: float
    f: float
    mr: float
    sign: int


@dataclass
class SearchState:
    t_min: float
    t_max: float
    t: float = math.nan
    incumbent_x: np.ndarray | None = None
    incumbent_value: float = math.inf
    incumbent_t: float | None = None
    incumbent_detail: object = None
    trace: list[TraceRow] = field(default_factory=list)


def init_bracket(instance: MeanRiskInstance, minimizer: InnerMinimizer):
    """``(0, sqrt(xbar'Q xbar), xbar)`` where ``xbar`` minimizes ``c'x`` over X."""
    res = minimizer.minimize_weighted(instance, 1.0, 0.0)
    xbar = np.array(res.x, dtype=np.int8)
    return 0.0, math.sqrt(instance.cov.quad_form(xbar)), xbar, res


def certify_local_min(instance: MeanRiskInstance, x, t: float) -> float:
    """``g(x, t) - mean_risk_value(x)``; zero exactly when ``t = sqrt(x'Qx)``."""
    if not t > 0:
        raise ValueError("t must be > 0")
    return max(surrogate_g(instance, x, t) - mean_risk_value(instance, x), 0.0)


def _relative_gap(f: float, value: float) -> float:
    return (f - value) / abs(f) if f != 0 else 0.0


def deterministic_solution(instance: MeanRiskInstance, minimizer: InnerMinimizer) -> Solution:
    _, t_max, xbar, res = init_bracket(instance, minimizer)
    return make_solution(
        instance, xbar, t_at=None, gap_certificate=0.0, iterations=0,
        termination="riskless", exact=res.exact, detail=res.detail,
    )


def binary_local_search(
    instance: MeanRiskInstance,
    minimizer: InnerMinimizer,
    config: SearchConfig | None = None,
) -> Solution:
    """Bisection on ``t`` driven by the sign of ``dg/dt`` at the inner minimizer.

    Returns the best mean-risk point seen over all iterations. The reported
    ``gap_certificate`` compares it with ``f`` at the last evaluated ``t``.
    """
    config = config or SearchConfig()
    if not instance.omega > 0:
        raise ValueError("binary local search needs omega > 0; use solve() for omega = 0")
    t_min, t_max, xbar, res = init_bracket(instance, minimizer)
    if t_max == 0.0:
        return make_solution(
            instance, xbar, t_at=0.0, gap_certificate=0.0, iterations=0,
            termination="riskless", exact=res.exact, detail=res.detail,
        )
    eps = config.derivative_eps if config.derivative_eps is not None else 0.5e-6 * instance.omega
    btol = config.bracket_tol if config.bracket_tol is not None else 1e-9 * t_max

    state = SearchState(t_min, t_max)
    termination = "max_iters"
    all_exact = True
    last_f = math.nan
    for it in range(1, config.max_iters + 1):
        t = 0.5 * (state.t_min + state.t_max)
        state.t = t
        ev = evaluate_f(minimizer, instance, t)
        all_exact = all_exact and ev.exact
        mr = mean_risk_value(instance, ev.x)
        if mr < state.incumbent_value:
            state.incumbent_x = np.array(ev.x, dtype=np.int8)
            state.incumbent_value = mr
            state.incumbent_t = t
            state.incumbent_detail = ev.detail
        slope = dg_dt(instance, ev.x, t)
        sign = 0 if abs(slope) < eps else (1 if slope > 0 else -1)
        state.trace.append(TraceRow(it, t, ev.f, mr, sign))
        last_f = ev.f
        if sign == 0:
            termination = "derivative"
            break
        if _relative_gap(ev.f, mr) <= config.gap_tol:
            termination = "gap"
            break
        if sign < 0:
            state.t_min = t
        else:
            state.t_max = t
        if state.t_max - state.t_min <= btol:
            termination = "bracket"
            break

    return make_solution(
        instance,
        state.incumbent_x,
        t_at=state.incumbent_t,
        gap_certificate=_relative_gap(last_f, state.incumbent_value),
        iterations=len(state.trace),
        termination=termination,
        exact=all_exact,
        detail=state.incumbent_detail,
        trace=tuple(state.trace),
    )


def solve(
    instance: MeanRiskInstance,
    minimizer: InnerMinimizer,
    config: SearchConfig | None = None,
) -> Solution:
    """Local search for omega > 0, the riskless optimum for omega = 0."""
    if instance.omega == 0:
        return deterministic_solution(instance, minimizer)
    return binary_local_search(instance, minimizer, config)


def global_scan(instance: MeanRiskInstance) -> Solution:
    """Exact optimum over an explicit set via the candidates ``t_x = sqrt(x'Qx)``.

    At ``t_x > 0`` the surrogate of ``x`` equals its mean-risk value, and
    ``min_t f(t)`` is attained at one of these candidates; points with
    ``t_x = 0`` contribute ``c'x`` directly.
    """
    if not isinstance(instance.feasible, ExplicitSet):
        raise TypeError("global_scan needs an explicit feasible set")
    P = instance.feasible.points
    if P.shape[0] > ENUMERATION_LIMIT:
        raise CapacityError(f"{P.shape[0]} points exceed the enumeration limit {ENUMERATION_LIMIT}")
    best_x, best_value, best_t = None, math.inf, None
    for row in P:
        value = mean_risk_value(instance, row)
        if value < best_value or (value == best_value and tuple(row) < tuple(best_x)):
            best_x, best_value = row, value
            best_t = math.sqrt(instance.cov.quad_form(row))
    return make_solution(instance, best_x, t_at=best_t, gap_certificate=0.0, termination="exact")


@dataclass(frozen=True)
class HullPoint:
    mean: float
    var: float
    x: np.ndarray
    detail: object = None


def parametric_exact(instance: MeanRiskInstance, minimizer: InnerMinimizer, tol: float = 1e-9) -> Solution:
    """Exact optimum through candidate-t refinement.

    The optimum minimizes ``c'x + lam * x'Qx`` for ``lam = omega/(2 t*)``, so
    it is a vertex of the lower hull of ``{(c'x, x'Qx)}``. Vertices are found
    by repeatedly solving at the ``t`` where two known surrogate curves cross
    (Eisner-Severance refinement). Requires an exact minimizer.
    """
    if instance.omega == 0:
        sol = deterministic_solution(instance, minimizer)
        return Solution(**{**sol.__dict__, "termination": "exact"})

    def point(mw, vw):
        res = minimizer.minimize_weighted(instance, mw, vw)
        if not res.exact:
            raise CapacityError("inner minimizer returned an approximate solution; exact refinement aborted")
        x = np.array(res.x, dtype=np.int8)
        return HullPoint(float(np.dot(instance.c, x)), instance.cov.quad_form(x), x, res.detail)

    low_mean = point(1.0, 0.0)
    low_var = point(0.0, 1.0)
    found = [low_mean, low_var]
    stack = [(low_var, low_mean)]
    solves = 2
    while stack:
        a, b = stack.pop()
        if b.var <= a.var + tol * max(1.0, a.var) or a.mean <= b.mean + tol * max(1.0, abs(b.mean)):
            continue
        lam = (a.mean - b.mean) / (b.var - a.var)
        p = point(1.0, lam)
        solves += 1
        line = a.mean + lam * a.var
        if p.mean + lam * p.var >= line - tol * max(1.0, abs(line)):
            continue
        found.append(p)
        stack.append((a, p))
        stack.append((p, b))

    best = min(found, key=lambda h: (mean_risk_value(instance, h.x), tuple(h.x)))
    t_star = math.sqrt(best.var)
    return make_solution(
        instance, best.x, t_at=t_star, gap_certificate=0.0, iterations=solves,
        termination="exact", detail=best.detail,
    )


def trace_csv(trace) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TRACE_HEADER)
    for row in trace:
        w.writerow([row.iteration, repr(row.t), repr(row.f), repr(row.mr), row.sign])
    return buf.getvalue()
