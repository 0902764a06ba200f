"""Dinic's blocking-flow max-flow on a fixed directed topology.

The topology is compiled once; every solve takes a fresh capacity vector,
which is how the interdiction and mean-risk solvers use it (same graph,
thousands of capacity patterns).
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from typing import Sequence

INF = math.inf


@dataclass(frozen=True)
class FlowResult:
    value: float
    source_side: frozenset[int]
    cut_arcs: tuple[int, ...]


class FlowGraph:
    """Residual-graph skeleton for ``n_nodes`` nodes and the given arcs.

    Arc ``i`` owns residual edges ``2*i`` (forward) and ``2*i + 1`` (reverse).
    """

    def __init__(self, n_nodes: int, tails: Sequence[int], heads: Sequence[int]):
        if len(tails) != len(heads):
            raise ValueError("tails and heads must have equal length")
        self.n_nodes = n_nodes
        self.tails = tuple(int(u) for u in tails)
        self.heads = tuple(int(v) for v in heads)
        self.n_arcs = len(self.tails)
        adj: list[list[int]] = [[] for _ in range(n_nodes)]
        to = [0] * (2 * self.n_arcs)
        for i, (u, v) in enumerate(zip(self.tails, self.heads)):
            if not (0 <= u < n_nodes and 0 <= v < n_nodes):
                raise ValueError(f"arc {i} ({u}->{v}) references a missing node")
            to[2 * i] = v
            to[2 * i + 1] = u
            adj[u].append(2 * i)
            adj[v].append(2 * i + 1)
        self._adj = [tuple(a) for a in adj]
        self._to = to

    def cut_capacity(self, caps: Sequence[float], source_side) -> float:
        total = 0.0
        for i in self.crossing_arcs(source_side):
            total += caps[i]
        return total

    def crossing_arcs(self, source_side) -> tuple[int, ...]:
        return tuple(
            i
            for i, (u, v) in enumerate(zip(self.tails, self.heads))
            if u in source_side and v not in source_side
        )

    def max_flow(self, caps: Sequence[float], s: int, t: int) -> FlowResult:
        """Maximum s-t flow and the minimum cut read off the final residual graph.

        Capacities must be >= 0; ``math.inf`` marks an uncapacitated arc.
        Residual capacities at or below ``1e-9 * max finite capacity`` are
        treated as saturated. If an all-infinite s-t path exists the value is
        ``inf`` and the source side is what infinite arcs reach from ``s``.
        """
        if s == t:
            raise ValueError("source and sink must differ")
        if len(caps) != self.n_arcs:
            raise ValueError(f"expected {self.n_arcs} capacities, got {len(caps)}")
        finite_max = 0.0
        for c in caps:
            if c < 0:
                raise ValueError("capacities must be non-negative")
            if c != INF and c > finite_max:
                finite_max = c
        tol = 1e-9 * finite_max

        adj, to = self._adj, self._to
        res = [0.0] * (2 * self.n_arcs)
        for i, c in enumerate(caps):
            res[2 * i] = c

        inf_reach = self._reach(s, lambda e: res[e] == INF)
        if t in inf_reach:
            return FlowResult(INF, frozenset(inf_reach), ())

        n = self.n_nodes
        flow = 0.0
        while True:
            level = [-1] * n
            level[s] = 0
            queue = deque([s])
            while queue:
                u = queue.popleft()
                for e in adj[u]:
                    v = to[e]
                    if level[v] < 0 and res[e] > tol:
                        level[v] = level[u] + 1
                        queue.append(v)
            if level[t] < 0:
                break
            it = [0] * n
            while True:
                pushed = self._augment(s, t, level, it, res, tol)
                if pushed <= 0.0:
                    break
                flow += pushed

        side = self._reach(s, lambda e: res[e] > tol)
        return FlowResult(flow, frozenset(side), self.crossing_arcs(side))

    def _augment(self, s, t, level, it, res, tol) -> float:
        # iterative DFS along the level graph; returns the bottleneck pushed
        adj, to = self._adj, self._to
        path: list[int] = []
        u = s
        while True:
            if u == t:
                amount = min(res[e] for e in path)
                for e in path:
                    if res[e] != INF:
                        res[e] -= amount
                    if res[e ^ 1] != INF:
                        res[e ^ 1] += amount
                return amount
            edges = adj[u]
            advanced = False
            while it[u] < len(edges):
                e = edges[it[u]]
                v = to[e]
                if res[e] > tol and level[v] == level[u] + 1:
                    path.append(e)
                    u = v
                    advanced = True
                    break
                it[u] += 1
            if advanced:
                continue
            if u == s:
                return 0.0
            # dead end: retire u from this phase and back up
            level[u] = -1
            e = path.pop()
            u = to[e ^ 1]
            it[u] += 1

    def _reach(self, s: int, usable) -> set[int]:
        adj, to = self._adj, self._to
        seen = {s}
        stack = [s]
        while stack:
            u = stack.pop()
            for e in adj[u]:
                v = to[e]
                if v not in seen and usable(e):
                    seen.add(v)
                    stack.append(v)
        return seen
