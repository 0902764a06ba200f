"""Domain types and the scalar mathematics of mean-risk minimization.

The mean-risk objective of a binary vector ``x`` is ``c'x + omega*sqrt(x'Qx)``.
Its perspective upper bound replaces the square root by
``(x'Qx/t + t) / 2``, giving the surrogate ``g(x, t)`` that every search and
inner solver in this package is built on.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Any, Union

import numpy as np

from meanrisk.errors import ModelError

PSD_REL_TOL = 1e-9


def _frozen(a, dtype=float) -> np.ndarray:
    arr = np.array(a, dtype=dtype)
    arr.setflags(write=False)
    return arr


def psd_pivot_check(Q: np.ndarray, rel_tol: float = PSD_REL_TOL) -> bool:
    """Pivoted Cholesky-style PSD test.

    A pivot below ``-rel_tol * trace(Q)`` fails the test. Once every remaining
    pivot is within tolerance of zero, the leftover Schur complement must be
    negligible as well.
    """
    A = np.array(Q, dtype=float, copy=True)
    n = A.shape[0]
    if n == 0:
        return True
    tol = rel_tol * max(float(np.trace(A)), 0.0)
    for k in range(n):
        rest = A[k:, k:]
        d = np.diag(rest)
        j = int(np.argmax(d))
        piv = d[j]
        if piv < -tol:
            return False
        if piv <= tol:
            return bool(np.max(np.abs(rest)) <= 10 * tol)
        if j:
            A[[k, k + j], :] = A[[k + j, k], :]
            A[:, [k, k + j]] = A[:, [k + j, k]]
        col = A[k + 1:, k] / piv
        A[k + 1:, k + 1:] -= np.outer(col, A[k, k + 1:])
        A[k + 1:, k] = 0.0
        A[k, k + 1:] = 0.0
    return True


class Covariance:
    """PSD covariance in one of three storage forms."""

    n: int

    def quad_form(self, x) -> float:
        raise NotImplementedError

    def quad_forms(self, X: np.ndarray) -> np.ndarray:
        """Row-wise ``x'Qx`` for a stacked 2-D array of vectors."""
        raise NotImplementedError

    def dense(self) -> np.ndarray:
        raise NotImplementedError

    def diagonal(self) -> np.ndarray:
        raise NotImplementedError

    @property
    def is_diagonal(self) -> bool:
        return False


@dataclass(frozen=True, eq=False)
class DiagonalCovariance(Covariance):
    q: np.ndarray

    def __post_init__(self):
        q = _frozen(self.q)
        if q.ndim != 1:
            raise ValueError("diagonal covariance needs a vector of variances")
        if not np.all(np.isfinite(q)) or np.any(q < 0):
            raise ValueError("variances must be finite and >= 0")
        object.__setattr__(self, "q", q)

    @property
    def n(self) -> int:
        return self.q.shape[0]

    @property
    def is_diagonal(self) -> bool:
        return True

    def quad_form(self, x) -> float:
        x = np.asarray(x, dtype=float)
        return float(np.dot(self.q, x * x))

    def quad_forms(self, X):
        X = np.asarray(X, dtype=float)
        return (X * X) @ self.q

    def dense(self):
        return np.diag(self.q)

    def diagonal(self):
        return self.q


@dataclass(frozen=True, eq=False)
class DenseCovariance(Covariance):
    Q: np.ndarray

    def __post_init__(self):
        Q = _frozen(self.Q)
        if Q.ndim != 2 or Q.shape[0] != Q.shape[1]:
            raise ValueError("dense covariance must be square")
        if not np.all(np.isfinite(Q)):
            raise ValueError("covariance entries must be finite")
        scale = max(float(np.max(np.abs(Q))) if Q.size else 0.0, 1e-300)
        if np.max(np.abs(Q - Q.T), initial=0.0) > 1e-12 * scale:
            raise ModelError("covariance matrix is not symmetric")
        if not psd_pivot_check(Q):
            raise ModelError("covariance matrix is not positive semidefinite")
        object.__setattr__(self, "Q", Q)

    @property
    def n(self) -> int:
        return self.Q.shape[0]

    def quad_form(self, x) -> float:
        x = np.asarray(x, dtype=float)
        return max(float(x @ self.Q @ x), 0.0)

    def quad_forms(self, X):
        X = np.asarray(X, dtype=float)
        return np.maximum(np.einsum("ij,jk,ik->i", X, self.Q, X), 0.0)

    def dense(self):
        return np.array(self.Q)

    def diagonal(self):
        return np.diag(self.Q).copy()


@dataclass(frozen=True, eq=False)
class FactorCovariance(Covariance):
    """``Q = diag(sigma2) + E F E'`` with ``F = H H'``."""

    sigma2: np.ndarray
    E: np.ndarray
    H: np.ndarray

    def __post_init__(self):
        s2, E, H = _frozen(self.sigma2), _frozen(self.E), _frozen(self.H)
        if s2.ndim != 1 or E.ndim != 2 or H.ndim != 2:
            raise ValueError("factor covariance needs sigma2 (n), E (n x m), H (m x k)")
        if E.shape[0] != s2.shape[0] or E.shape[1] != H.shape[0]:
            raise ValueError(f"shape mismatch: sigma2 {s2.shape}, E {E.shape}, H {H.shape}")
        if not (np.all(np.isfinite(s2)) and np.all(np.isfinite(E)) and np.all(np.isfinite(H))):
            raise ValueError("factor data must be finite")
        if np.any(s2 < 0):
            raise ValueError("sigma2 must be >= 0")
        object.__setattr__(self, "sigma2", s2)
        object.__setattr__(self, "E", E)
        object.__setattr__(self, "H", H)
        object.__setattr__(self, "_EH", E @ H)

    @property
    def n(self) -> int:
        return self.sigma2.shape[0]

    @property
    def factors(self) -> int:
        return self.E.shape[1]

    def quad_form(self, x) -> float:
        x = np.asarray(x, dtype=float)
        y = x @ self._EH
        return float(np.dot(self.sigma2, x * x) + np.dot(y, y))

    def quad_forms(self, X):
        X = np.asarray(X, dtype=float)
        Y = X @ self._EH
        return (X * X) @ self.sigma2 + np.einsum("ij,ij->i", Y, Y)

    def dense(self):
        return np.diag(self.sigma2) + self._EH @ self._EH.T

    def diagonal(self):
        return self.sigma2 + np.einsum("ij,ij->i", self._EH, self._EH)


# --- feasible sets ---------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ExplicitSet:
    """A finite list of binary vectors."""

    points: np.ndarray

    def __post_init__(self):
        P = np.array(self.points, dtype=np.int8)
        if P.ndim != 2 or P.shape[0] == 0:
            raise ModelError("explicit feasible set must contain at least one vector")
        if not np.all((P == 0) | (P == 1)):
            raise ValueError("explicit feasible set vectors must be binary")
        P.setflags(write=False)
        object.__setattr__(self, "points", P)

    @classmethod
    def hypercube(cls, n: int) -> "ExplicitSet":
        grid = (np.arange(2**n)[:, None] >> np.arange(n - 1, -1, -1)) & 1
        return cls(grid)

    @property
    def n(self) -> int:
        return self.points.shape[1]

    def __len__(self) -> int:
        return self.points.shape[0]

    def contains(self, x) -> bool:
        x = np.asarray(x, dtype=np.int8)
        return bool(np.any(np.all(self.points == x, axis=1)))


@dataclass(frozen=True, eq=False)
class InterdictionSet:
    """Residual-cut vectors of a budgeted interdiction network (see ``netflow``)."""

    network: Any

    @property
    def n(self) -> int:
        return self.network.n_vars


FeasibleSet = Union[ExplicitSet, InterdictionSet]


@dataclass(frozen=True, eq=False)
class MeanRiskInstance:
    c: np.ndarray
    cov: Covariance
    omega: float
    feasible: FeasibleSet

    def __post_init__(self):
        c = _frozen(self.c)
        if c.ndim != 1 or not np.all(np.isfinite(c)):
            raise ValueError("cost vector must be a finite 1-D array")
        if self.cov.n != c.shape[0] or self.feasible.n != c.shape[0]:
            raise ValueError(
                f"dimension mismatch: c has {c.shape[0]}, covariance {self.cov.n}, "
                f"feasible set {self.feasible.n}"
            )
        if not (math.isfinite(self.omega) and self.omega >= 0):
            raise ValueError("omega must be finite and >= 0")
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "omega", float(self.omega))

    @property
    def n(self) -> int:
        return self.c.shape[0]

    def with_omega(self, omega: float) -> "MeanRiskInstance":
        return MeanRiskInstance(self.c, self.cov, omega, self.feasible)

    def is_feasible(self, x) -> bool:
        if isinstance(self.feasible, ExplicitSet):
            return self.feasible.contains(x)
        x = np.asarray(x)
        return x.shape == (self.n,) and bool(np.all((x == 0) | (x == 1)))


@dataclass(frozen=True)
class Solution:
    """A feasible point with its mean-risk decomposition.

    ``gap_certificate`` is ``(f(t) - value) / |f(t)|`` at the final search
    point; it certifies local optimality only.
    """

    x: np.ndarray
    mean: float
    stdev: float
    value: float
    t_at: float | None = None
    gap_certificate: float | None = None
    iterations: int = 0
    termination: str = ""
    exact: bool = True
    detail: Any = None
    trace: tuple = field(default=(), repr=False)


def make_solution(instance: MeanRiskInstance, x, **kw) -> Solution:
    x = np.array(x, dtype=np.int8)
    mean = float(np.dot(instance.c, x))
    stdev = math.sqrt(instance.cov.quad_form(x))
    return Solution(x=x, mean=mean, stdev=stdev, value=mean + instance.omega * stdev, **kw)


# --- confidence calibration ------------------------------------------------


class Calibration(enum.Enum):
    NORMAL = "normal"
    DISTRIBUTION_FREE = "distribution-free"
    BOUNDED_SYMMETRIC = "bounded-symmetric"


@dataclass(frozen=True)
class ConfidenceSpec:
    epsilon: float
    calibration: Calibration = Calibration.NORMAL


# --- scalar operations -----------------------------------------------------


def _check_x(instance: MeanRiskInstance, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape != (instance.n,):
        raise ValueError(f"x has shape {x.shape}, expected ({instance.n},)")
    return x


def mean_risk_value(instance: MeanRiskInstance, x) -> float:
    x = _check_x(instance, x)
    return float(np.dot(instance.c, x)) + instance.omega * math.sqrt(instance.cov.quad_form(x))


def perspective_h(cov: Covariance, x, t: float) -> float:
    """Closure of the perspective of ``x'Qx``; returns ``math.inf`` when t = 0 < x'Qx."""
    if t < 0:
        raise ValueError("t must be >= 0")
    qf = cov.quad_form(x)
    if t > 0:
        return qf / t
    return 0.0 if qf == 0 else math.inf


def surrogate_g(instance: MeanRiskInstance, x, t: float) -> float:
    if not t > 0:
        raise ValueError("surrogate is evaluated at t > 0 only")
    x = _check_x(instance, x)
    half = instance.omega / 2
    return float(np.dot(instance.c, x)) + half * perspective_h(instance.cov, x, t) + half * t


def dg_dt(instance: MeanRiskInstance, x, t: float) -> float:
    if not t > 0:
        raise ValueError("derivative is evaluated at t > 0 only")
    x = _check_x(instance, x)
    half = instance.omega / 2
    return -half * instance.cov.quad_form(x) / (t * t) + half


def normal_cdf(y: float) -> float:
    return 0.5 * math.erfc(-y / math.sqrt(2.0))


# Acklam's rational approximation (relative error below 1.2e-9)
_A = (-3.969683028665376e01, 2.209460984245205e02, -2.759285104469687e02,
      1.383577518672690e02, -3.066479806614716e01, 2.506628277459239e00)
_B = (-5.447609879822406e01, 1.615858368580409e02, -1.556989798598866e02,
      6.680131188771972e01, -1.328068155288572e01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e00,
      -2.549732539343734e00, 4.374664141464968e00, 2.938163982698783e00)
_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e00,
      3.754408661907416e00)
_P_LOW = 0.02425


def _tail(q: float) -> float:
    return ((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5]


def _tail_den(q: float) -> float:
    return (((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1.0


def inv_normal_cdf(p: float) -> float:
    """Standard normal quantile: rational approximation plus one Newton step."""
    if not 0.0 < p < 1.0:
        raise ValueError(f"p must lie in (0, 1), got {p}")
    if p < _P_LOW:
        q = math.sqrt(-2.0 * math.log(p))
        y = _tail(q) / _tail_den(q)
    elif p <= 1.0 - _P_LOW:
        q = p - 0.5
        r = q * q
        num = (((((_A[0] * r + _A[1]) * r + _A[2]) * r + _A[3]) * r + _A[4]) * r + _A[5]) * q
        den = ((((_B[0] * r + _B[1]) * r + _B[2]) * r + _B[3]) * r + _B[4]) * r + 1.0
        y = num / den
    else:
        q = math.sqrt(-2.0 * math.log1p(-p))
        y = -_tail(q) / _tail_den(q)
    # residual from the smaller tail to avoid cancellation near p = 1
    if p > 0.5:
        err = (1.0 - p) - 0.5 * math.erfc(y / math.sqrt(2.0))
    else:
        err = normal_cdf(y) - p
    density = math.exp(-0.5 * y * y) / math.sqrt(2.0 * math.pi)
    return y - err / density


def omega_from_confidence(spec: ConfidenceSpec) -> float:
    eps = spec.epsilon
    if not 0.0 < eps <= 0.5:
        raise ValueError(f"epsilon must lie in (0, 0.5], got {eps}")
    if spec.calibration is Calibration.NORMAL:
        return inv_normal_cdf(1.0 - eps)
    if spec.calibration is Calibration.DISTRIBUTION_FREE:
        return math.sqrt((1.0 - eps) / eps)
    if spec.calibration is Calibration.BOUNDED_SYMMETRIC:
        return math.sqrt(math.log(1.0 / eps))
    raise ValueError(f"unknown calibration {spec.calibration!r}")
