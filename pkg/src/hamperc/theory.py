"""Closed-form and numeric predictions for site percolation on the torus.

The exploration of a cluster is compared with a d-type branching process in
which a type-i individual bears Poisson(lam * a_j) (or Binomial) children of
every type j != i.  Its mean matrix ``M_lam`` has entries ``lam * a_j`` off
the diagonal, and the giant component appears when its Perron root exceeds 1.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np

from .torus import TorusSpec

BISECT_TOL = 1e-12
PERRON_TOL = 1e-12
PERRON_MAX_ITER = 100_000
FIXED_POINT_TOL = 1e-13
FIXED_POINT_MAX_ITER = 1_000_000


class ConvergenceError(RuntimeError):
    def __init__(self, message: str, residual: float):
        super().__init__(f"{message} (last residual {residual:.3e})")
        self.residual = residual


def _as_a(a: Sequence[float], min_d: int = 2) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    if a.ndim != 1 or a.size < min_d:
        raise ValueError(f"need at least {min_d} aspect ratios, got {a.size}")
    if np.any(a <= 0) or not np.all(np.isfinite(a)):
        raise ValueError("aspect ratios must be positive and finite")
    return a


def expectation_matrix(lam: float, a: Sequence[float]) -> np.ndarray:
    """Mean offspring matrix: entry (i, j) = lam * a_j for i != j, 0 on the
    diagonal."""
    a = _as_a(a, min_d=1)
    m = np.tile(lam * a, (a.size, 1))
    np.fill_diagonal(m, 0.0)
    return m


def elementary_symmetric(a: Sequence[float]) -> np.ndarray:
    """``e_0 .. e_d`` of ``a`` via the one-pass recurrence."""
    e = np.zeros(len(a) + 1)
    e[0] = 1.0
    for k, x in enumerate(a, start=1):
        e[1 : k + 1] = e[1 : k + 1] + x * e[0:k]
    return e


def _poly(lam: float, e: np.ndarray) -> float:
    # 1 - sum_{l>=2} (l-1) lam^l e_l, the sign-free part of det(M - I)
    return 1.0 - sum((l - 1) * lam**l * e[l] for l in range(2, e.size))


def char_poly_value(lam: float, a: Sequence[float]) -> float:
    """``det(M_lam - I)`` from the elementary symmetric sums of ``a``."""
    a = _as_a(a, min_d=1)
    return (-1) ** a.size * _poly(lam, elementary_symmetric(a))


def critical_lambda(a: Sequence[float]) -> float:
    """Unique positive root of ``det(M_lam - I) = 0``.

    The bracketed polynomial is 1 at 0 and strictly decreasing for lam > 0,
    so bisection on a doubled bracket is safe.
    """
    a = _as_a(a)
    e = elementary_symmetric(a)
    hi = 1.0
    while _poly(hi, e) > 0:
        hi *= 2.0
    lo = 0.0 if hi == 1.0 else hi / 2.0
    while hi - lo > BISECT_TOL:
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if _poly(mid, e) > 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def perron(lam: float, a: Sequence[float]) -> tuple[float, np.ndarray]:
    """Perron root and positive right eigenvector (unit l1 norm) of M_lam.

    Power iteration runs on ``M + s I`` with ``s = lam * max(a) / 2``: the
    other eigenvalues of M are real and no smaller than ``-lam * max(a)``, so
    the shift makes the Perron root strictly dominant in modulus (plain
    iteration oscillates when d = 2).
    """
    a = _as_a(a)
    if lam <= 0:
        raise ValueError("lambda must be positive")
    m = expectation_matrix(lam, a)
    shift = lam * a.max() / 2.0
    m = m + shift * np.eye(a.size)
    mu = np.full(a.size, 1.0 / a.size)
    rho = 0.0
    for _ in range(PERRON_MAX_ITER):
        y = m @ mu
        rho_new = y.sum()  # mu >= 0 with unit l1 norm
        y /= rho_new
        change = np.abs(y - mu).sum()
        mu = y
        if abs(rho_new - rho) <= PERRON_TOL * rho_new and change <= PERRON_TOL:
            return float(rho_new - shift), mu
        rho = rho_new
    raise ConvergenceError("power iteration did not converge", change)


def extinction(lam: float, a: Sequence[float]) -> tuple[np.ndarray, float]:
    """Extinction probabilities ``q_i`` of the Poisson process started from
    one type-i individual, and ``q = (prod q_i) ** (1 / (d - 1))``.

    ``q`` is also the extinction probability from a single untyped ancestor
    that bears children of every type.
    """
    a = _as_a(a)
    d = a.size
    rho, _ = perron(lam, a)
    if rho <= 1.0 + 1e-12:
        return np.ones(d), 1.0
    x = np.zeros(d)
    resid = math.inf
    for _ in range(FIXED_POINT_MAX_ITER):
        # f_i(x) = exp(-lam * sum_{j != i} a_j (1 - x_j))
        s = a * (1.0 - x)
        nxt = np.exp(-lam * (s.sum() - s))
        resid = np.abs(nxt - x).max()
        x = nxt
        if resid < FIXED_POINT_TOL:
            break
    else:
        raise ConvergenceError("extinction fixed point did not converge", resid)
    q = float(np.exp(np.log(x).sum() / (d - 1)))
    return x, q


def giant_size_prediction(spec: TorusSpec, lam: float) -> tuple[float, float]:
    """Predicted giant size ``(1 - q) lam prod(a) n^(d-1)`` and the expected
    occupied count ``lam prod(a) n^(d-1)`` it is a fraction of."""
    lam_c = critical_lambda(spec.a)
    if lam <= lam_c:
        raise ValueError(f"lambda = {lam} is not supercritical (lambda_c = {lam_c})")
    _, q = extinction(lam, spec.a)
    norm = lam * math.prod(spec.a) * spec.n ** (spec.d - 1)
    return (1.0 - q) * norm, norm


def connectivity_thresholds(a: Sequence[float]) -> tuple[float, float]:
    """``(c_conn, c_iso_giant)`` for ``p = c ln(n) / n``.

    ``c_conn = (d-1) / sum(a)``.  ``c_iso_giant = (d-1) / (2 sum_{i>=2} a_i
    + a_1)`` with ``a`` sorted descending first, whatever order it was
    given in.
    """
    a = np.sort(_as_a(a))[::-1]
    d = a.size
    return (d - 1) / a.sum(), (d - 1) / (2.0 * a[1:].sum() + a[0])


def psi(theta: float, lam: float, a: np.ndarray, mu: np.ndarray) -> np.ndarray:
    """Poisson-limit bound on the mgf of a one-step change of <S, mu> from a
    type-i individual, for every i."""
    g = lam * a * np.expm1(theta * mu)
    return np.exp(-theta * mu + g.sum() - g)


@dataclass(frozen=True)
class TailConstants:
    mu: np.ndarray
    rho: float
    theta_star: float
    alpha: float
    C: float

    def bound(self, x):
        """``C exp(-alpha x)``, the bound on P(total progeny > x)."""
        return self.C * np.exp(-self.alpha * np.asarray(x, dtype=float))


def tail_constants(lam: float, a: Sequence[float], start: Sequence[float] | None = None) -> TailConstants:
    """Constants of the exponential bound on subcritical total progeny.

    ``exp(-alpha) = min_theta max_i psi_i(theta)``; ``C = exp(theta' <start,
    mu>)``, or ``exp(theta' |mu|_1)`` (a bound over every single-ancestor
    start) when ``start`` is omitted.
    """
    a = _as_a(a)
    lam_c = critical_lambda(a)
    if lam >= lam_c:
        raise ValueError(f"lambda = {lam} is not subcritical (lambda_c = {lam_c})")
    rho, mu = perron(lam, a)

    def envelope(t):
        return psi(t, lam, a, mu).max()

    hi = 1.0
    while envelope(hi) < 1.0:
        hi *= 2.0
    # max of convex functions is convex, so golden-section finds the minimum
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    lo = 0.0
    x1 = hi - invphi * (hi - lo)
    x2 = lo + invphi * (hi - lo)
    f1, f2 = envelope(x1), envelope(x2)
    while hi - lo > 1e-12:
        if f1 < f2:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - invphi * (hi - lo)
            f1 = envelope(x1)
        else:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + invphi * (hi - lo)
            f2 = envelope(x2)
    theta = 0.5 * (lo + hi)
    alpha = -math.log(envelope(theta))
    weight = mu.sum() if start is None else float(np.dot(start, mu))
    return TailConstants(mu=mu, rho=rho, theta_star=theta, alpha=alpha, C=math.exp(theta * weight))


@dataclass(frozen=True)
class TheoryReport:
    d: int
    a: tuple[float, ...]
    lam: float
    lambda_c: float
    rho: float
    q_vec: tuple[float, ...]
    q: float
    giant_fraction: float
    conn_threshold: float
    iso_giant_threshold: float

    def to_dict(self) -> dict:
        return asdict(self)


def theory_report(a: Sequence[float], lam: float) -> TheoryReport:
    a_arr = _as_a(a)
    lam_c = critical_lambda(a_arr)
    rho, _ = perron(lam, a_arr)
    q_vec, q = extinction(lam, a_arr)
    c_conn, c_iso = connectivity_thresholds(a_arr)
    return TheoryReport(
        d=a_arr.size,
        a=tuple(float(x) for x in a_arr),
        lam=float(lam),
        lambda_c=lam_c,
        rho=rho,
        q_vec=tuple(float(x) for x in q_vec),
        q=q,
        giant_fraction=1.0 - q,
        conn_threshold=c_conn,
        iso_giant_threshold=c_iso,
    )
