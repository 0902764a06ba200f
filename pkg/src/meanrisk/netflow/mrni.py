"""Mean-risk network interdiction: the inner minimizer over residual cuts.

The feasible ``x`` are indicator vectors of the cut arcs left uninterdicted
by a budget-feasible interdiction. With diagonal covariance the weighted
inner problem is a deterministic interdiction problem with effective
capacities ``mean_weight*c + var_weight*q``. With correlated covariance it
is solved by branch-and-bound on arc membership, bounding the quadratic part
through the diagonal extraction ``x'Qx >= delta * 1'x``.
"""

from __future__ import annotations

import heapq
import itertools
import math
import threading
from dataclasses import dataclass

import numpy as np

from meanrisk.core import DiagonalCovariance, InterdictionSet, MeanRiskInstance
from meanrisk.netflow.interdiction import InterdictionStats, interdiction_inner
from meanrisk.netflow.network import CutSolution, Network
from meanrisk.oracle import (
    Evaluation,
    ExtractionCertificate,
    InnerMinimizer,
    InnerResult,
    diagonal_extraction,
    evaluate_f,
)

NODE_BUDGET = 10**6
PRUNE_TOL = 1e-9


def mrni_instance(network: Network, omega: float, cov=None) -> MeanRiskInstance:
    """Mean-risk instance over the interdictable arcs of ``network``."""
    if cov is None:
        cov = DiagonalCovariance(network.variances())
    return MeanRiskInstance(network.means(), cov, omega, InterdictionSet(network))


def effective_capacities(network: Network, omega: float, t: float) -> np.ndarray:
    """``c_a + omega/(2t) * sigma_a**2`` for every interdictable arc."""
    if not t > 0:
        raise ValueError("t must be > 0")
    return network.means() + (omega / (2.0 * t)) * network.variances()


@dataclass
class CorrelatedStats:
    nodes: int = 0
    inner_nodes: int = 0


class MRNIMinimizer(InnerMinimizer):
    """Exact inner minimizer for interdiction instances.

    ``node_budget`` caps the correlated branch-and-bound; when it is hit the
    incumbent is returned with ``exact=False``.
    """

    def __init__(self, node_budget: int = NODE_BUDGET):
        self.node_budget = node_budget
        self._certs: dict[int, tuple[object, ExtractionCertificate]] = {}
        self._lock = threading.Lock()

    def certificate(self, cov) -> ExtractionCertificate:
        with self._lock:
            hit = self._certs.get(id(cov))
            if hit is not None and hit[0] is cov:
                return hit[1]
        cert = diagonal_extraction(cov)
        with self._lock:
            self._certs[id(cov)] = (cov, cert)
        return cert

    def minimize_weighted(self, instance, mean_weight, var_weight):
        if not isinstance(instance.feasible, InterdictionSet):
            raise TypeError("MRNIMinimizer needs an interdiction instance")
        network: Network = instance.feasible.network
        cov = instance.cov
        if cov.is_diagonal or var_weight == 0:
            w = mean_weight * instance.c
            if var_weight:
                w = w + var_weight * cov.diagonal()
            sol = interdiction_inner(network, network.full_capacities(w), network.budget)
            x = sol.x_vector(network)
            return InnerResult(x, _weighted(instance, mean_weight, var_weight, x), True, sol)
        sol, exact, _ = correlated_inner(
            network, instance, mean_weight, var_weight, self.certificate(cov), self.node_budget
        )
        x = sol.x_vector(network)
        return InnerResult(x, _weighted(instance, mean_weight, var_weight, x), exact, sol)


def _weighted(instance: MeanRiskInstance, mw: float, vw: float, x) -> float:
    value = mw * float(np.dot(instance.c, x))
    if vw:
        value += vw * instance.cov.quad_form(x)
    return value


def mrni_inner_minimizer(instance: MeanRiskInstance, t: float, minimizer: MRNIMinimizer | None = None) -> Evaluation:
    return evaluate_f(minimizer or MRNIMinimizer(), instance, t)


def _forced_network(network: Network, forced: list[int]) -> Network:
    """Append uncapacitated s->tail and head->t arcs so each forced arc must cross the cut."""
    if not forced:
        return network
    tails, heads = list(network.tails), list(network.heads)
    extra = 0
    for a in forced:
        tails += [network.source, network.heads[a]]
        heads += [network.tails[a], network.sink]
        extra += 2
    inf = (math.inf,) * extra
    return Network(
        network.n_nodes, network.source, network.sink, tuple(tails), tuple(heads),
        network.mean + inf, network.variance + (0.0,) * extra, network.alpha + inf,
        network.interdictable + (False,) * extra, network.budget,
    )


def correlated_inner(
    network: Network,
    instance: MeanRiskInstance,
    mean_weight: float,
    var_weight: float,
    cert: ExtractionCertificate,
    node_budget: int = NODE_BUDGET,
    stats: CorrelatedStats | None = None,
) -> tuple[CutSolution, bool, CorrelatedStats]:
    """Minimize ``mean_weight*c'x + var_weight*x'Qx`` over residual cuts.

    Nodes fix arcs in the residual cut (``x_a = 1``) or out of it
    (``x_a = 0``: not crossing, or crossing and interdicted). The node bound
    linearizes the quadratic term around the fixed-in arcs with the
    extracted diagonal ``delta`` and solves the resulting deterministic
    interdiction problem exactly.
    """
    stats = stats or CorrelatedStats()
    Q = instance.cov.dense()
    c = instance.c
    n = instance.n
    arcs = network.interdictable_arcs
    delta = cert.delta
    m_arcs = network.n_arcs

    def objective(x) -> float:
        return mean_weight * float(c @ x) + var_weight * float(x @ Q @ x)

    def restrict(sol: CutSolution) -> CutSolution:
        cut = tuple(a for a in sol.cut_arcs if a < m_arcs)
        hit = tuple(a for a in sol.interdicted if a < m_arcs)
        x = np.zeros(n)
        pos = network.arc_position
        hs = set(hit)
        for a in cut:
            if a not in hs:
                x[pos[a]] = 1.0
        return CutSolution(sol.source_side, cut, hit, objective(x))

    # warm incumbent from the diagonal of Q
    diag_w = np.maximum(mean_weight * c + var_weight * np.diag(Q), 0.0)
    incumbent = restrict(interdiction_inner(network, network.full_capacities(diag_w), network.budget))

    def bound(fixed_in: frozenset, fixed_out: frozenset):
        s1 = sorted(fixed_in)
        const = mean_weight * float(c[s1].sum()) + var_weight * float(Q[np.ix_(s1, s1)].sum())
        w = mean_weight * c + var_weight * (2.0 * Q[s1].sum(axis=0) + delta)
        free = [k for k in range(n) if k not in fixed_in and k not in fixed_out]
        neg = float(sum(min(w[k], 0.0) for k in free))
        big = float(sum(max(w[k], 0.0) for k in free)) + 1.0
        caps = [math.inf] * network.n_arcs
        for k, a in enumerate(arcs):
            if k in fixed_in:
                caps[a] = 0.0
            elif k in fixed_out:
                caps[a] = big
            else:
                caps[a] = max(float(w[k]), 0.0)
        derived = _forced_network(network, [arcs[k] for k in s1])
        caps += [math.inf] * (derived.n_arcs - network.n_arcs)
        istats = InterdictionStats()
        sol = interdiction_inner(derived, caps, network.budget, istats)
        stats.inner_nodes += istats.nodes
        if sol.residual_value >= big - PRUNE_TOL:
            return None
        return const + neg + sol.residual_value, restrict(sol), w, free

    tie = itertools.count()
    heap: list = []
    exact = True

    def expand(fixed_in, fixed_out, depth):
        nonlocal incumbent
        stats.nodes += 1
        out = bound(fixed_in, fixed_out)
        if out is None:
            return
        lb, cand, w, free = out
        if cand.residual_value < incumbent.residual_value - PRUNE_TOL:
            incumbent = cand
        if lb >= incumbent.residual_value - PRUNE_TOL:
            return
        x = cand.x_vector(network).astype(float)
        in_cut = [k for k in free if x[k] == 1.0]
        if in_cut:
            marginal = Q @ x
            k = max(in_cut, key=lambda j: (marginal[j], -j))
        else:
            negative = [k for k in free if w[k] < 0]
            if not negative:
                return
            k = min(negative, key=lambda j: (w[j], j))
        heapq.heappush(heap, (lb, -depth, next(tie), fixed_in, fixed_out, k))

    expand(frozenset(), frozenset(), 0)
    while heap:
        lb, negdepth, _, fixed_in, fixed_out, k = heapq.heappop(heap)
        if lb >= incumbent.residual_value - PRUNE_TOL:
            break
        if stats.nodes >= node_budget:
            exact = False
            break
        depth = -negdepth + 1
        expand(fixed_in | {k}, fixed_out, depth)
        expand(fixed_in, fixed_out | {k}, depth)
    return incumbent, exact, stats
