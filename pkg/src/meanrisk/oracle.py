"""Inner minimizers: evaluate ``f(t) = min over X of g(x, t)``.

Every minimizer solves the weighted problem
``min  mean_weight * c'x + var_weight * x'Qx`` over the feasible set; the
surrogate at ``t`` is the case ``mean_weight = 1, var_weight = omega/(2t)``
plus the constant ``omega*t/2``. The same primitive with ``var_weight = 0``
gives the riskless optimum used to open the search bracket.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Callable

import numpy as np

from meanrisk.core import (
    ExplicitSet,
    MeanRiskInstance,
    psd_pivot_check,
    surrogate_g,
)
from meanrisk.errors import CapacityError, ModelError

ENUMERATION_LIMIT = 2**25
TIE_TOL = 1e-12


@dataclass(frozen=True)
class InnerResult:
    x: np.ndarray
    objective: float
    exact: bool = True
    detail: Any = None


class InnerMinimizer:
    """Contract for exact (or flagged-approximate) weighted inner solvers.

    Implementations must be reentrant and deterministic.
    """

    def minimize_weighted(self, instance: MeanRiskInstance, mean_weight: float, var_weight: float) -> InnerResult:
        raise NotImplementedError


@dataclass(frozen=True)
class Evaluation:
    t: float
    x: np.ndarray
    f: float
    exact: bool
    detail: Any = None


def evaluate_f(minimizer: InnerMinimizer, instance: MeanRiskInstance, t: float) -> Evaluation:
    if not t > 0:
        raise ValueError("f is evaluated at t > 0 only")
    res = minimizer.minimize_weighted(instance, 1.0, instance.omega / (2.0 * t))
    return Evaluation(t, res.x, surrogate_g(instance, res.x, t), res.exact, res.detail)


def _explicit_points(instance: MeanRiskInstance) -> np.ndarray:
    if not isinstance(instance.feasible, ExplicitSet):
        raise TypeError("this minimizer needs an explicit feasible set")
    P = instance.feasible.points
    if P.shape[0] > ENUMERATION_LIMIT:
        raise CapacityError(f"{P.shape[0]} points exceed the enumeration limit {ENUMERATION_LIMIT}")
    return P


def _lexmin_within(P: np.ndarray, values: np.ndarray) -> int:
    """Index of the lexicographically smallest row among near-minimal values."""
    best = float(np.min(values))
    ties = np.flatnonzero(values <= best + TIE_TOL * max(1.0, abs(best)))
    if ties.size == 1:
        return int(ties[0])
    rows = [tuple(P[i]) for i in ties]
    return int(ties[min(range(len(rows)), key=rows.__getitem__)])


class BruteForceMinimizer(InnerMinimizer):
    """Enumerates an explicit feasible set; ties go to the lexicographically smallest x."""

    def minimize_weighted(self, instance, mean_weight, var_weight):
        P = _explicit_points(instance)
        values = mean_weight * (P @ instance.c)
        if var_weight:
            values = values + var_weight * instance.cov.quad_forms(P)
        i = _lexmin_within(P, values)
        return InnerResult(np.array(P[i]), float(values[i]))


class LinearScanMinimizer(InnerMinimizer):
    """Diagonal-covariance inner problem solved as a linear objective over X.

    For binary x and ``Q = diag(q)``, ``x'Qx = q'x``, so the weighted problem
    is linear with weights ``mean_weight*c + var_weight*q``.
    """

    def minimize_weighted(self, instance, mean_weight, var_weight):
        if not instance.cov.is_diagonal:
            raise TypeError("LinearScanMinimizer requires a diagonal covariance")
        P = _explicit_points(instance)
        w = mean_weight * instance.c + var_weight * instance.cov.diagonal()
        values = P @ w
        i = _lexmin_within(P, values)
        return InnerResult(np.array(P[i]), float(values[i]))


def brute_force_inner(instance: MeanRiskInstance, t: float) -> tuple[np.ndarray, float]:
    ev = evaluate_f(BruteForceMinimizer(), instance, t)
    return ev.x, ev.f


# --- diagonal extraction for correlated covariance ----------------------------


@dataclass(frozen=True)
class ExtractionCertificate:
    """``Q - delta*I`` is PSD, so ``x'Qx >= delta * 1'x`` on binaries."""

    delta: float
    lambda_min_estimate: float
    residual_psd_check: bool


def smallest_eigenvalue_estimate(Q: np.ndarray, max_iter: int = 5000, tol: float = 1e-15) -> float:
    """Power iteration on ``s*I - Q`` with ``s`` a Gershgorin upper bound."""
    n = Q.shape[0]
    if n == 0:
        return 0.0
    s = float(np.max(np.sum(np.abs(Q), axis=1)))
    if s == 0.0:
        return 0.0
    B = s * np.eye(n) - Q
    v = np.linspace(1.0, 2.0, n)
    v /= np.linalg.norm(v)
    rq = float(v @ B @ v)
    for _ in range(max_iter):
        w = B @ v
        norm = np.linalg.norm(w)
        if norm == 0.0:
            return s
        v = w / norm
        new = float(v @ B @ v)
        if abs(new - rq) <= tol * s:
            rq = new
            break
        rq = new
    return s - rq


def diagonal_extraction(cov, rel_tol: float = 1e-9) -> ExtractionCertificate:
    Q = cov.dense()
    if not psd_pivot_check(Q, rel_tol):
        raise ModelError("covariance is not positive semidefinite")
    if cov.is_diagonal:
        estimate = float(np.min(cov.diagonal())) if cov.n else 0.0
    else:
        estimate = smallest_eigenvalue_estimate(Q)
    # The Rayleigh-quotient estimate sits at or above lambda_min, so bisect
    # down from it with a zero-tolerance pivot test to keep the bound valid.
    eye = np.eye(Q.shape[0])
    hi = max(0.0, estimate)
    if hi == 0.0 or psd_pivot_check(Q - hi * eye, 0.0):
        return ExtractionCertificate(hi, estimate, True)
    lo = 0.0
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if psd_pivot_check(Q - mid * eye, 0.0):
            lo = mid
        else:
            hi = mid
    return ExtractionCertificate(lo, estimate, psd_pivot_check(Q - lo * eye, rel_tol))


def linearized_inner_bound(
    instance: MeanRiskInstance,
    t: float,
    cert: ExtractionCertificate,
    linear_solver: Callable[[np.ndarray], float],
) -> float:
    """Lower bound on ``f(t)`` from ``x'Qx >= delta * 1'x``.

    ``linear_solver(w)`` must return ``min over X of w'x`` exactly.
    """
    if not t > 0:
        raise ValueError("t must be > 0")
    lam = instance.omega / (2.0 * t)
    w = instance.c + lam * cert.delta * np.ones(instance.n)
    return float(linear_solver(w)) + instance.omega * t / 2.0


def explicit_linear_solver(instance: MeanRiskInstance) -> Callable[[np.ndarray], float]:
    P = _explicit_points(instance)
    return lambda w: float(np.min(P @ np.asarray(w, dtype=float)))


def default_minimizer(instance: MeanRiskInstance) -> InnerMinimizer:
    if isinstance(instance.feasible, ExplicitSet):
        return BruteForceMinimizer()
    from meanrisk.netflow.mrni import MRNIMinimizer

    return MRNIMinimizer()


__all__ = [
    "BruteForceMinimizer",
    "Evaluation",
    "ExtractionCertificate",
    "InnerMinimizer",
    "InnerResult",
    "LinearScanMinimizer",
    "brute_force_inner",
    "default_minimizer",
    "diagonal_extraction",
    "evaluate_f",
    "explicit_linear_solver",
    "linearized_inner_bound",
    "smallest_eigenvalue_estimate",
]
