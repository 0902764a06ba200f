"""Directed s-t networks with stochastic arc capacities and interdiction costs."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from meanrisk.netflow.maxflow import FlowGraph


@dataclass(frozen=True, eq=False)
class Network:
    """Graph data for mean-risk interdiction.

    Non-interdictable arcs (source/sink fans) carry ``mean = inf``, zero
    variance and ``alpha = inf``. Decision vectors ``x`` are indexed over the
    interdictable arcs only, in arc order (see :attr:`interdictable_arcs`).
    """

    n_nodes: int
    source: int
    sink: int
    tails: tuple[int, ...]
    heads: tuple[int, ...]
    mean: tuple[float, ...]
    variance: tuple[float, ...]
    alpha: tuple[float, ...]
    interdictable: tuple[bool, ...]
    budget: float = 0.0
    _graph: FlowGraph = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        m = len(self.tails)
        for name in ("heads", "mean", "variance", "alpha", "interdictable"):
            if len(getattr(self, name)) != m:
                raise ValueError(f"{name} has length {len(getattr(self, name))}, expected {m}")
        if self.source == self.sink:
            raise ValueError("source and sink must differ")
        for node in (self.source, self.sink):
            if not 0 <= node < self.n_nodes:
                raise ValueError(f"node {node} out of range")
        if not self.budget >= 0:
            raise ValueError("budget must be >= 0")
        for i in range(m):
            if self.interdictable[i]:
                if not (math.isfinite(self.mean[i]) and self.mean[i] >= 0):
                    raise ValueError(f"arc {i}: mean must be finite and >= 0")
                if not (math.isfinite(self.variance[i]) and self.variance[i] >= 0):
                    raise ValueError(f"arc {i}: variance must be finite and >= 0")
                if not (math.isfinite(self.alpha[i]) and self.alpha[i] > 0):
                    raise ValueError(f"arc {i}: interdiction cost must be finite and > 0")
            elif self.mean[i] != math.inf:
                raise ValueError(f"arc {i}: non-interdictable arcs must have infinite capacity")
        object.__setattr__(self, "_graph", FlowGraph(self.n_nodes, self.tails, self.heads))

    @property
    def graph(self) -> FlowGraph:
        return self._graph

    @property
    def n_arcs(self) -> int:
        return len(self.tails)

    @cached_property
    def interdictable_arcs(self) -> tuple[int, ...]:
        return tuple(i for i, flag in enumerate(self.interdictable) if flag)

    @cached_property
    def arc_position(self) -> dict[int, int]:
        """Arc index -> position in the x vector."""
        return {a: k for k, a in enumerate(self.interdictable_arcs)}

    @property
    def n_vars(self) -> int:
        return len(self.interdictable_arcs)

    def means(self) -> np.ndarray:
        return np.array([self.mean[a] for a in self.interdictable_arcs], dtype=float)

    def variances(self) -> np.ndarray:
        return np.array([self.variance[a] for a in self.interdictable_arcs], dtype=float)

    def costs(self) -> np.ndarray:
        return np.array([self.alpha[a] for a in self.interdictable_arcs], dtype=float)

    def full_capacities(self, values) -> list[float]:
        """Expand per-variable values to a per-arc capacity list (fans -> inf)."""
        caps = [math.inf] * self.n_arcs
        for a, v in zip(self.interdictable_arcs, values):
            caps[a] = float(v)
        return caps

    def with_budget(self, budget: float) -> "Network":
        return Network(
            self.n_nodes, self.source, self.sink, self.tails, self.heads,
            self.mean, self.variance, self.alpha, self.interdictable, float(budget),
        )

    def dead_nodes(self) -> set[int]:
        """Nodes not on any s-t path."""
        fwd = _reach(self.n_nodes, self.source, self.tails, self.heads)
        bwd = _reach(self.n_nodes, self.sink, self.heads, self.tails)
        return {v for v in range(self.n_nodes) if v not in fwd or v not in bwd}

    def pruned(self) -> "Network":
        """Copy without dead nodes and the arcs touching them."""
        dead = self.dead_nodes()
        if not dead:
            return self
        keep = [v for v in range(self.n_nodes) if v not in dead]
        relabel = {v: k for k, v in enumerate(keep)}
        arcs = [i for i in range(self.n_arcs) if self.tails[i] not in dead and self.heads[i] not in dead]
        pick = lambda seq: tuple(seq[i] for i in arcs)  # noqa: E731
        return Network(
            len(keep), relabel[self.source], relabel[self.sink],
            tuple(relabel[self.tails[i]] for i in arcs),
            tuple(relabel[self.heads[i]] for i in arcs),
            pick(self.mean), pick(self.variance), pick(self.alpha), pick(self.interdictable),
            self.budget,
        )


def _reach(n, start, tails, heads) -> set[int]:
    out = [[] for _ in range(n)]
    for u, v in zip(tails, heads):
        out[u].append(v)
    seen = {start}
    stack = [start]
    while stack:
        u = stack.pop()
        for v in out[u]:
            if v not in seen:
                seen.add(v)
                stack.append(v)
    return seen


@dataclass(frozen=True)
class CutSolution:
    """A source set, its crossing arcs, and the interdicted subset.

    ``residual_value`` sums the capacities of crossing arcs that are not
    interdicted (``inf`` if an uncapacitated arc crosses).
    """

    source_side: frozenset[int]
    cut_arcs: tuple[int, ...]
    interdicted: tuple[int, ...]
    residual_value: float

    def residual_arcs(self) -> tuple[int, ...]:
        hit = set(self.interdicted)
        return tuple(a for a in self.cut_arcs if a not in hit)

    def x_vector(self, network: Network) -> np.ndarray:
        x = np.zeros(network.n_vars, dtype=np.int8)
        pos = network.arc_position
        for a in self.residual_arcs():
            x[pos[a]] = 1
        return x

    def interdiction_cost(self, network: Network) -> float:
        return float(sum(network.alpha[a] for a in self.interdicted))
