"""Deterministic budgeted interdiction: the fixed-t inner problem for diagonal Q."""

from __future__ import annotations

import heapq
import itertools
import math
from dataclasses import dataclass
from typing import Sequence

from meanrisk.netflow.maxflow import FlowResult
from meanrisk.netflow.network import CutSolution, Network

PRUNE_TOL = 1e-9
LAGRANGE_STEPS = 12


@dataclass
class InterdictionStats:
    nodes: int = 0
    flows: int = 0


def max_flow_min_cut(network: Network, capacities: Sequence[float]) -> tuple[float, CutSolution]:
    """Max s-t flow under per-arc ``capacities`` and the matching minimum cut."""
    res = network.graph.max_flow(capacities, network.source, network.sink)
    cut = CutSolution(res.source_side, res.cut_arcs, (), res.value)
    return res.value, cut


def _residual(caps, cut_arcs, interdicted, flow_value: float = 0.0) -> float:
    if flow_value == math.inf:
        # an uncapacitated s-t path survives every interdiction
        return math.inf
    hit = set(interdicted)
    return math.fsum(caps[a] for a in cut_arcs if a not in hit)


def _greedy_interdict(network: Network, caps, cut_arcs, budget, already=()):
    """Interdict cut arcs by decreasing capacity/cost ratio while affordable."""
    chosen = list(already)
    taken = set(chosen)
    left = budget
    order = sorted(
        (a for a in cut_arcs if network.interdictable[a] and a not in taken),
        key=lambda a: (-caps[a] / network.alpha[a], a),
    )
    for a in order:
        if network.alpha[a] <= left + 1e-12:
            chosen.append(a)
            left -= network.alpha[a]
    return tuple(sorted(chosen))


def greedy_incumbent(network: Network, caps: Sequence[float], budget: float) -> CutSolution:
    """Min cut, greedy interdiction of its arcs, re-cut with those zeroed; repeat to a fixed point."""
    graph = network.graph
    interdicted: tuple[int, ...] = ()
    best: CutSolution | None = None
    seen = set()
    while interdicted not in seen:
        seen.add(interdicted)
        work = list(caps)
        for a in interdicted:
            work[a] = 0.0
        res = graph.max_flow(work, network.source, network.sink)
        chosen = _greedy_interdict(network, caps, res.cut_arcs, budget)
        value = _residual(caps, res.cut_arcs, chosen, res.value)
        cand = CutSolution(res.source_side, res.cut_arcs, chosen, value)
        if best is None or cand.residual_value < best.residual_value - PRUNE_TOL:
            best = cand
        interdicted = chosen
    return best


def interdiction_inner(
    network: Network,
    capacities: Sequence[float],
    budget: float | None = None,
    stats: InterdictionStats | None = None,
) -> CutSolution:
    """Exact budgeted interdiction by best-first branch-and-bound.

    Minimizes, over source sets ``S`` and interdiction sets ``I`` with
    ``alpha(I) <= budget``, the capacity of the arcs leaving ``S`` that are
    not in ``I``. ``capacities`` is a per-arc list; non-interdictable arcs
    are usually ``inf``.
    """
    if budget is None:
        budget = network.budget
    if budget < 0:
        raise ValueError("budget must be >= 0")
    stats = stats if stats is not None else InterdictionStats()
    caps = [float(c) for c in capacities]
    graph = network.graph
    alpha = network.alpha
    candidates = [a for a in network.interdictable_arcs if alpha[a] <= budget + 1e-12 and caps[a] > 0]

    incumbent = greedy_incumbent(network, caps, budget)
    stats.flows += 1
    if not candidates:
        return _canonical(network, caps, incumbent)

    # best-first: lowest bound, deeper nodes first on ties
    tie = itertools.count()
    heap: list = []

    def bound(interdicted: frozenset, kept: frozenset, remaining: float, mu_hint: float):
        # max over mu >= 0 of mincut(min(c, mu*alpha) on affordable free arcs) - mu*remaining;
        # mu = 0 is the plain "zero every affordable free arc" bound
        free = [a for a in candidates if a not in interdicted and a not in kept and alpha[a] <= remaining + 1e-12]
        base = list(caps)
        for a in interdicted:
            base[a] = 0.0

        def evaluate(mu):
            work = list(base)
            for a in free:
                work[a] = min(caps[a], mu * alpha[a])
            stats.flows += 1
            res = graph.max_flow(work, network.source, network.sink)
            slope = -remaining
            for a in res.cut_arcs:
                if a in free_set and mu * alpha[a] < caps[a]:
                    slope += alpha[a]
            return res.value - mu * remaining, slope, res

        free_set = set(free)
        best = evaluate(0.0)
        at_zero = best[2]
        best_mu = 0.0
        if not free or remaining <= 0 or best[1] <= 0:
            return best[0], at_zero, 0.0, at_zero
        lo, hi = 0.0, max(caps[a] / alpha[a] for a in free)
        mu = min(max(mu_hint, lo), hi) if mu_hint > 0 else 0.5 * hi
        for _ in range(LAGRANGE_STEPS):
            val = evaluate(mu)
            if val[0] > best[0]:
                best, best_mu = val, mu
                if best[0] >= incumbent.residual_value - PRUNE_TOL:
                    break
            if val[1] > 0:
                lo = mu
            elif val[1] < 0:
                hi = mu
            else:
                break
            if hi - lo <= 1e-9 * max(hi, 1.0):
                break
            mu = 0.5 * (lo + hi)
        return best[0], best[2], best_mu, at_zero

    def complete(res: FlowResult, interdicted, kept, remaining):
        nonlocal incumbent
        chosen = _greedy_interdict(
            network, caps,
            [a for a in res.cut_arcs if a not in kept and a not in interdicted],
            remaining, already=[a for a in res.cut_arcs if a in interdicted],
        )
        value = _residual(caps, res.cut_arcs, chosen, res.value)
        if value < incumbent.residual_value - PRUNE_TOL:
            incumbent = CutSolution(res.source_side, res.cut_arcs, chosen, value)

    def branch_arcs(res: FlowResult, interdicted, kept, remaining):
        return [
            a for a in res.cut_arcs
            if a in candidates_set and a not in interdicted and a not in kept
            and alpha[a] <= remaining + 1e-12
        ]

    def push(interdicted, kept, remaining, depth, mu_hint):
        stats.nodes += 1
        lb, res, mu, res0 = bound(interdicted, kept, remaining, mu_hint)
        if lb >= incumbent.residual_value - PRUNE_TOL:
            return
        complete(res, interdicted, kept, remaining)
        branch = branch_arcs(res, interdicted, kept, remaining)
        if not branch and res0 is not res:
            # the mu > 0 cut is fully decided; fall back to the mu = 0 cut, which
            # is exact (bound == its completion) when it is fully decided too
            complete(res0, interdicted, kept, remaining)
            branch = branch_arcs(res0, interdicted, kept, remaining)
        if not branch or lb >= incumbent.residual_value - PRUNE_TOL:
            return
        a = max(branch, key=lambda b: (caps[b], -b))
        heapq.heappush(heap, (lb, -depth, next(tie), interdicted, kept, remaining, a, mu))

    candidates_set = set(candidates)
    push(frozenset(), frozenset(), float(budget), 0, 0.0)
    while heap:
        lb, negdepth, _, interdicted, kept, remaining, a, mu = heapq.heappop(heap)
        if lb >= incumbent.residual_value - PRUNE_TOL:
            break
        depth = -negdepth + 1
        push(interdicted | {a}, kept, remaining - alpha[a], depth, mu)
        push(interdicted, kept | {a}, remaining, depth, mu)
    return _canonical(network, caps, incumbent)


def _canonical(network: Network, caps, sol: CutSolution) -> CutSolution:
    cut = set(sol.cut_arcs)
    hit = tuple(sorted(a for a in sol.interdicted if a in cut))
    if network.sink in sol.source_side:
        return CutSolution(sol.source_side, sol.cut_arcs, (), math.inf)
    return CutSolution(sol.source_side, sol.cut_arcs, hit, _residual(caps, sol.cut_arcs, hit))
