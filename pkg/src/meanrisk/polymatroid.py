"""Extended polymatroid inequalities for the diagonal risk term.

For ``Q = diag(q)`` the risk term ``sigma(S) = sqrt(q(S))`` is submodular in
the support ``S`` of ``x``. Its extended polymatroid has extreme points
given by prefix differences of ``sigma`` along a permutation, and each one
yields a valid inequality ``w >= pi'x`` for the epigraph of
``sqrt(q'x)`` over binary ``x``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

VIOLATION_TOL = 1e-9
VALID_TOL = 1e-9
EXHAUSTIVE_LIMIT = 20


@dataclass(frozen=True)
class PolymatroidCut:
    """The inequality ``w >= pi'x``; ``permutation`` generated ``pi`` (0-based)."""

    pi: np.ndarray
    permutation: tuple[int, ...]
    rhs_var: str = "w"

    def lhs(self, x) -> float:
        return float(np.dot(self.pi, x))

    def to_text(self) -> str:
        perm = " ".join(str(i + 1) for i in self.permutation)
        coef = " ".join(repr(float(v)) for v in self.pi)
        return f"perm {perm}\npi {coef}\n{self.rhs_var} >= pi.x\n"


def _check_q(q) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    if q.ndim != 1:
        raise ValueError("q must be a vector")
    if np.any(q < 0) or not np.all(np.isfinite(q)):
        raise ValueError("variances must be finite and >= 0")
    return q


def sigma(q, support) -> float:
    q = np.asarray(q, dtype=float)
    return math.sqrt(float(np.sum(q[list(support)]))) if len(support) else 0.0


def greedy_extreme_point(q, permutation) -> PolymatroidCut:
    """``pi[perm[i]] = sigma(prefix_i) - sigma(prefix_{i-1})``."""
    q = _check_q(q)
    perm = tuple(int(i) for i in permutation)
    if sorted(perm) != list(range(q.size)):
        raise ValueError("permutation must list every index exactly once")
    pi = np.zeros(q.size)
    running = 0.0
    prev = 0.0
    for i in perm:
        running += q[i]
        cur = math.sqrt(running)
        pi[i] = cur - prev
        prev = cur
    return PolymatroidCut(pi, perm)


def separate(q, x_hat, w_hat: float) -> PolymatroidCut | None:
    """Most violated extended polymatroid inequality at ``(x_hat, w_hat)``, if any.

    Sorting by decreasing ``x_hat`` (ties by index) maximizes ``pi'x_hat``
    over all extreme points, so a cut is found whenever one exists.
    """
    x_hat = np.asarray(x_hat, dtype=float)
    perm = sorted(range(x_hat.size), key=lambda i: (-x_hat[i], i))
    cut = greedy_extreme_point(q, perm)
    return cut if cut.lhs(x_hat) > w_hat + VIOLATION_TOL else None


def validate_cut(cut: PolymatroidCut, q) -> bool:
    """Exhaustive validity over ``{0,1}^n`` plus tightness on the defining chain."""
    q = _check_q(q)
    n = q.size
    if n > EXHAUSTIVE_LIMIT:
        raise ValueError(f"exhaustive validation supports n <= {EXHAUSTIVE_LIMIT}")
    pi = np.asarray(cut.pi, dtype=float)
    shifts = np.arange(n)
    for start in range(0, 1 << n, 1 << 16):
        codes = np.arange(start, min(start + (1 << 16), 1 << n))
        X = ((codes[:, None] >> shifts) & 1).astype(float)
        if np.any(X @ pi > np.sqrt(X @ q) + VALID_TOL):
            return False
    prefix = np.zeros(n)
    for i in cut.permutation:
        prefix[i] = 1.0
        if abs(float(pi @ prefix) - math.sqrt(float(q @ prefix))) > VALID_TOL:
            return False
    return True


def export_cuts(cuts) -> str:
    return "".join(c.to_text() for c in cuts)
