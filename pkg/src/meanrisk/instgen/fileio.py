"""Plain-text instance files and JSON solution files.

Instance layout (one record per line, ``#`` comments and blank lines are
ignored on input)::

    meanrisk-instance 1
    kind interdiction | explicit
    omega <float>
    epsilon <float>                      optional
    # interdiction
    nodes <int>
    source <int>
    sink <int>
    budget <float>
    arcs <count>
    arc <tail> <head> <mean> <variance> <alpha> <0|1>    x count
    # explicit
    dim <n>
    c <n floats>
    points <count>
    point <n bits>                       x count
    covariance diagonal                  interdiction: variances come from the arcs
    covariance diagonal / q <n floats>   explicit
    covariance dense <n> / row <n floats> x n
    covariance factor <n> <m> <k> / sigma2 <n floats> / e <m floats> x n / h <k floats> x m
    end

Floats are written with ``repr`` so parsing reproduces them bit for bit.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Any

import numpy as np

from meanrisk.core import (
    Covariance,
    DenseCovariance,
    DiagonalCovariance,
    ExplicitSet,
    FactorCovariance,
    InterdictionSet,
    MeanRiskInstance,
    Solution,
)
from meanrisk.errors import ModelError, ParseError
from meanrisk.netflow.network import Network

MAGIC = "meanrisk-instance"
VERSION = 1
SOLUTION_FORMAT = "meanrisk-solution"


@dataclass(frozen=True, eq=False)
class InstanceDocument:
    """Parsed instance file. Exactly one of ``network`` / ``points`` is set."""

    kind: str
    omega: float
    cov: Covariance
    epsilon: float | None = None
    network: Network | None = None
    c: np.ndarray | None = None
    points: np.ndarray | None = None

    def instance(self) -> MeanRiskInstance:
        if self.kind == "interdiction":
            return MeanRiskInstance(self.network.means(), self.cov, self.omega, InterdictionSet(self.network))
        return MeanRiskInstance(self.c, self.cov, self.omega, ExplicitSet(self.points))

    def with_network(self, network: Network) -> "InstanceDocument":
        return InstanceDocument(self.kind, self.omega, self.cov, self.epsilon, network, self.c, self.points)

    def with_omega(self, omega: float, epsilon: float | None = None) -> "InstanceDocument":
        return InstanceDocument(self.kind, omega, self.cov, epsilon, self.network, self.c, self.points)


def _f(v: float) -> str:
    return repr(float(v))


def _floats(vals) -> str:
    return " ".join(_f(v) for v in vals)


def serialize(doc: InstanceDocument) -> str:
    out = [f"{MAGIC} {VERSION}", f"kind {doc.kind}", f"omega {_f(doc.omega)}"]
    if doc.epsilon is not None:
        out.append(f"epsilon {_f(doc.epsilon)}")
    if doc.kind == "interdiction":
        net = doc.network
        out += [f"nodes {net.n_nodes}", f"source {net.source}", f"sink {net.sink}",
                f"budget {_f(net.budget)}", f"arcs {net.n_arcs}"]
        for i in range(net.n_arcs):
            out.append(
                f"arc {net.tails[i]} {net.heads[i]} {_f(net.mean[i])} {_f(net.variance[i])} "
                f"{_f(net.alpha[i])} {int(net.interdictable[i])}"
            )
    elif doc.kind == "explicit":
        n = doc.c.shape[0]
        out += [f"dim {n}", f"c {_floats(doc.c)}", f"points {doc.points.shape[0]}"]
        out += ["point " + " ".join(str(int(b)) for b in row) for row in doc.points]
    else:
        raise ValueError(f"unknown kind {doc.kind!r}")
    cov = doc.cov
    if isinstance(cov, DiagonalCovariance):
        out.append("covariance diagonal")
        if doc.kind == "explicit":
            out.append(f"q {_floats(cov.q)}")
    elif isinstance(cov, DenseCovariance):
        out.append(f"covariance dense {cov.n}")
        out += [f"row {_floats(r)}" for r in cov.Q]
    elif isinstance(cov, FactorCovariance):
        out.append(f"covariance factor {cov.n} {cov.E.shape[1]} {cov.H.shape[1]}")
        out.append(f"sigma2 {_floats(cov.sigma2)}")
        out += [f"e {_floats(r)}" for r in cov.E]
        out += [f"h {_floats(r)}" for r in cov.H]
    else:
        raise ValueError("unsupported covariance form")
    out.append("end")
    return "\n".join(out) + "\n"


class _Reader:
    def __init__(self, text: str):
        self.lines = [
            (k + 1, line.split())
            for k, line in enumerate(text.splitlines())
            if line.strip() and not line.lstrip().startswith("#")
        ]
        self.pos = 0
        self.last_line = len(text.splitlines())

    def next(self, section: str) -> tuple[int, list[str]]:
        if self.pos >= len(self.lines):
            raise ParseError(f"unexpected end of file: missing section '{section}'", self.last_line)
        item = self.lines[self.pos]
        self.pos += 1
        return item

    def peek_key(self) -> str | None:
        return self.lines[self.pos][1][0] if self.pos < len(self.lines) else None

    def field(self, key: str, n_values: int | None = 1) -> tuple[int, list[str]]:
        line, toks = self.next(key)
        if toks[0] != key:
            raise ParseError(f"expected '{key}', found unknown or misplaced field '{toks[0]}'", line)
        vals = toks[1:]
        if n_values is not None and len(vals) != n_values:
            raise ParseError(f"field '{key}' expects {n_values} value(s), got {len(vals)}", line)
        return line, vals


def _num(tok: str, line: int, key: str, kind=float):
    try:
        return kind(tok)
    except ValueError:
        raise ParseError(f"field '{key}': cannot read {tok!r} as {kind.__name__}", line) from None


def _vec(r: _Reader, key: str, n: int) -> np.ndarray:
    line, vals = r.field(key, n)
    return np.array([_num(v, line, key) for v in vals], dtype=float)


def _int(r: _Reader, key: str) -> int:
    line, vals = r.field(key)
    return _num(vals[0], line, key, int)


def parse(text: str) -> InstanceDocument:
    r = _Reader(text)
    line, toks = r.next("header")
    if toks[0] != MAGIC or len(toks) != 2:
        raise ParseError(f"missing '{MAGIC} <version>' header", line)
    if toks[1] != str(VERSION):
        raise ParseError(f"unsupported version {toks[1]!r}", line)
    line, (kind,) = r.field("kind")
    if kind not in ("interdiction", "explicit"):
        raise ParseError(f"unknown kind {kind!r}", line)
    line, (tok,) = r.field("omega")
    omega = _num(tok, line, "omega")
    epsilon = None
    if r.peek_key() == "epsilon":
        line, (tok,) = r.field("epsilon")
        epsilon = _num(tok, line, "epsilon")

    network = c = points = None
    if kind == "interdiction":
        n_nodes, source, sink = _int(r, "nodes"), _int(r, "source"), _int(r, "sink")
        line, (tok,) = r.field("budget")
        budget = _num(tok, line, "budget")
        n_arcs = _int(r, "arcs")
        cols: list[list] = [[] for _ in range(6)]
        for _ in range(n_arcs):
            line, vals = r.field("arc", 6)
            for j, kind_j in enumerate((int, int, float, float, float, int)):
                cols[j].append(_num(vals[j], line, "arc", kind_j))
            if cols[5][-1] not in (0, 1):
                raise ParseError("arc interdictable flag must be 0 or 1", line)
        try:
            network = Network(
                n_nodes, source, sink, tuple(cols[0]), tuple(cols[1]), tuple(cols[2]),
                tuple(cols[3]), tuple(cols[4]), tuple(bool(v) for v in cols[5]), budget,
            )
        except (ValueError, IndexError) as exc:
            raise ParseError(f"invalid network: {exc}", line) from None
        n = network.n_vars
    else:
        n = _int(r, "dim")
        c = _vec(r, "c", n)
        n_points = _int(r, "points")
        rows = []
        for _ in range(n_points):
            line, vals = r.field("point", n)
            if any(v not in ("0", "1") for v in vals):
                raise ParseError("point entries must be 0 or 1", line)
            rows.append([int(v) for v in vals])
        points = np.array(rows, dtype=np.int8).reshape(n_points, n)

    line, toks = r.next("covariance")
    if toks[0] != "covariance" or len(toks) < 2:
        raise ParseError(f"expected 'covariance', found unknown or misplaced field '{toks[0]}'", line)
    form = toks[1]
    try:
        if form == "diagonal" and len(toks) == 2:
            cov: Covariance = DiagonalCovariance(network.variances() if kind == "interdiction" else _vec(r, "q", n))
        elif form == "dense" and len(toks) == 3:
            k = _num(toks[2], line, "covariance", int)
            cov = DenseCovariance(np.array([_vec(r, "row", k) for _ in range(k)]).reshape(k, k))
        elif form == "factor" and len(toks) == 5:
            k, m, h = (_num(t, line, "covariance", int) for t in toks[2:])
            sigma2 = _vec(r, "sigma2", k)
            E = np.array([_vec(r, "e", m) for _ in range(k)]).reshape(k, m)
            H = np.array([_vec(r, "h", h) for _ in range(m)]).reshape(m, h)
            cov = FactorCovariance(sigma2, E, H)
        else:
            raise ParseError(f"unknown covariance form {' '.join(toks[1:])!r}", line)
    except (ValueError, ModelError) as exc:
        raise ParseError(f"invalid covariance: {exc}", line) from None
    if cov.n != n:
        raise ParseError(f"covariance dimension {cov.n} does not match {n} decision variables", line)
    line, toks = r.next("end")
    if toks != ["end"]:
        raise ParseError(f"expected 'end', found unknown or misplaced field '{toks[0]}'", line)
    if r.pos != len(r.lines):
        raise ParseError("content after 'end'", r.lines[r.pos][0])
    if not (math.isfinite(omega) and omega >= 0):
        raise ParseError("omega must be finite and >= 0")
    return InstanceDocument(kind, omega, cov, epsilon, network, c, points)


def read_instance(path) -> InstanceDocument:
    with open(path, encoding="utf-8") as fh:
        return parse(fh.read())


def write_instance(path, doc: InstanceDocument) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(serialize(doc))


def solution_record(doc: InstanceDocument, sol: Solution, **extra: Any) -> dict:
    """JSON-ready summary. Arc and variable ids are 1-based."""
    rec: dict[str, Any] = {
        "format": f"{SOLUTION_FORMAT} {VERSION}",
        "value": sol.value,
        "mean": sol.mean,
        "stdev": sol.stdev,
        "t": sol.t_at,
        "gap_certificate": sol.gap_certificate,
        "iterations": sol.iterations,
        "termination": sol.termination,
        "exact": sol.exact,
    }
    if doc.kind == "interdiction":
        net = doc.network
        arcs = net.interdictable_arcs
        rec["x_support"] = [arcs[k] + 1 for k in np.flatnonzero(sol.x)]
        rec["interdicted"] = [a + 1 for a in sol.detail.interdicted] if sol.detail is not None else []
    else:
        rec["x_support"] = [int(k) + 1 for k in np.flatnonzero(sol.x)]
    rec.update(extra)
    return rec


def write_solution(path, record: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(record, fh, indent=2, allow_nan=False, default=_json_default)
        fh.write("\n")


def _json_default(v):
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, np.floating):
        return float(v)
    raise TypeError(f"cannot serialize {type(v).__name__}")
