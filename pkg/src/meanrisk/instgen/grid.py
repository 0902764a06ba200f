"""Seeded grid interdiction instances.

A ``p x q`` grid has ``p`` columns of ``q`` nodes plus a source and a sink.
The source feeds every node of the first column, the last column feeds the
sink, horizontal arcs point toward the sink and each vertical arc points up
or down with probability one half.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from meanrisk.core import (
    Covariance,
    DiagonalCovariance,
    FactorCovariance,
    inv_normal_cdf,
)
from meanrisk.netflow.network import Network

ETA_VALUES = (2, 4, 6, 8, 10, 20)

# one independent PCG64 stream per field class
STREAM_CAPACITY = 0
STREAM_STDEV = 1
STREAM_COST = 2
STREAM_DIRECTION = 3
STREAM_EXPOSURE = 4
STREAM_LOADING = 5


@dataclass(frozen=True)
class HalfRows:
    """``beta = ceil(q/2) * r``: enough to cut half the rows at mean cost when r = 1."""


@dataclass(frozen=True)
class MeanCostScaled:
    """``beta = mean(alpha) * q / eta``."""

    eta: int


@dataclass(frozen=True)
class Explicit:
    beta: float


BudgetRule = Union[HalfRows, MeanCostScaled, Explicit]


@dataclass(frozen=True)
class GridSpec:
    p: int
    q: int
    seed: int = 0
    correlated: bool = False
    m: int = 20
    epsilon: float = 0.05
    budget_rule: BudgetRule = HalfRows()
    cost_scale: int = 1

    def __post_init__(self):
        if self.p < 2:
            raise ValueError("cols must be >= 2")
        if self.q < 2:
            raise ValueError("rows must be >= 2")
        if self.m < 1:
            raise ValueError("factors must be >= 1")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        if not 0 < self.epsilon <= 0.5:
            raise ValueError("epsilon must lie in (0, 0.5]")
        if self.cost_scale < 1:
            raise ValueError("cost scale must be >= 1")
        rule = self.budget_rule
        if isinstance(rule, MeanCostScaled) and rule.eta not in ETA_VALUES:
            raise ValueError(f"eta must be one of {ETA_VALUES}")
        if isinstance(rule, Explicit) and not (math.isfinite(rule.beta) and rule.beta >= 0):
            raise ValueError("explicit budget must be finite and >= 0")


@dataclass(frozen=True)
class GridInstance:
    network: Network
    cov: Covariance
    omega: float
    epsilon: float


def _stream(seed: int, k: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(k,))))


def node_id(spec: GridSpec, col: int, row: int) -> int:
    return 1 + col * spec.q + row


def generate_grid(spec: GridSpec) -> GridInstance:
    p, q = spec.p, spec.q
    source, sink = 0, p * q + 1
    tails: list[int] = []
    heads: list[int] = []
    for r in range(q):
        tails.append(source)
        heads.append(node_id(spec, 0, r))
    n_fan = q
    for col in range(p - 1):
        for r in range(q):
            tails.append(node_id(spec, col, r))
            heads.append(node_id(spec, col + 1, r))
    flips = _stream(spec.seed, STREAM_DIRECTION).integers(0, 2, size=p * (q - 1))
    k = 0
    for col in range(p):
        for r in range(q - 1):
            lo, hi = node_id(spec, col, r), node_id(spec, col, r + 1)
            if flips[k]:
                lo, hi = hi, lo
            tails.append(lo)
            heads.append(hi)
            k += 1
    n_inner = len(tails) - n_fan
    for r in range(q):
        tails.append(node_id(spec, p - 1, r))
        heads.append(sink)

    mean = _stream(spec.seed, STREAM_CAPACITY).integers(1, 11, size=n_inner).astype(float)
    sigma = _stream(spec.seed, STREAM_STDEV).integers(1, 11, size=n_inner).astype(float)
    r = spec.cost_scale
    alpha = _stream(spec.seed, STREAM_COST).integers(r, 3 * r + 1, size=n_inner).astype(float)
    var = sigma * sigma

    rule = spec.budget_rule
    if isinstance(rule, HalfRows):
        beta = float(math.ceil(q / 2) * r)
    elif isinstance(rule, MeanCostScaled):
        beta = float(alpha.mean()) * q / rule.eta
    else:
        beta = float(rule.beta)

    inf = (math.inf,) * q
    network = Network(
        n_nodes=p * q + 2,
        source=source,
        sink=sink,
        tails=tuple(tails),
        heads=tuple(heads),
        mean=inf + tuple(mean.tolist()) + inf,
        variance=(0.0,) * q + tuple(var.tolist()) + (0.0,) * q,
        alpha=inf + tuple(alpha.tolist()) + inf,
        interdictable=(False,) * q + (True,) * n_inner + (False,) * q,
        budget=beta,
    )
    if spec.correlated:
        m = spec.m
        rng = _stream(spec.seed, STREAM_EXPOSURE)
        mask = rng.random((n_inner, m)) < 0.2
        E = np.where(mask, rng.uniform(0.0, 0.1, size=(n_inner, m)), 0.0)
        bound = 100.0 / (p * q)
        H = _stream(spec.seed, STREAM_LOADING).uniform(-bound, bound, size=(m, m))
        cov: Covariance = FactorCovariance(var, E, H)
    else:
        cov = DiagonalCovariance(var)
    return GridInstance(network, cov, inv_normal_cdf(1.0 - spec.epsilon), spec.epsilon)
