"""Multitype branching processes approximating cluster exploration.

A type-i individual bears children of every type j != i: Binomial(L_j, lam/n)
at finite n, with ``L_j = round(a_j n)``, or Poisson(lam a_j) in the limit.
An *untyped* individual (the first vertex of an exploration, which may look
along every axis) bears children of all d types.

Two engines are provided.  :func:`walk_step` / :func:`total_progeny` follow
the random-walk formulation one retirement at a time.  :func:`progeny_sizes`
advances whole generations for a batch of trials at once; since ``T >= cap``
is the same event in both formulations, the law of ``min(T, cap)`` agrees
and the batch engine is used wherever the trial count or cap is large.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

BLOCK = 4096  # trials per RNG stream in the batch engine

SPECIAL = "special"


@dataclass(frozen=True)
class OffspringLaw:
    kind: str  # "poisson" or "binomial"
    lam: float
    a: tuple[float, ...]
    n: int | None = None
    special_first_step: bool = True

    def __post_init__(self):
        object.__setattr__(self, "a", tuple(float(x) for x in self.a))
        if self.kind not in ("poisson", "binomial"):
            raise ValueError(f"unknown offspring law {self.kind!r}")
        if self.lam < 0:
            raise ValueError("lambda must be nonnegative")
        if any(x <= 0 for x in self.a):
            raise ValueError("aspect ratios must be positive")
        if self.kind == "binomial":
            if self.n is None or self.n < 1:
                raise ValueError("binomial law needs a positive n")
            if self.lam / self.n > 1:
                raise ValueError("lambda / n exceeds 1")

    @property
    def d(self) -> int:
        return len(self.a)

    @property
    def sides(self) -> np.ndarray:
        return np.array([max(1, math.floor(x * self.n + 0.5)) for x in self.a], dtype=np.int64)

    def mean_matrix(self) -> np.ndarray:
        """Exact mean offspring matrix of this law (binomial means use the
        rounded sides)."""
        rate = self.lam * np.asarray(self.a) if self.kind == "poisson" else self.sides * (self.lam / self.n)
        m = np.tile(rate, (self.d, 1))
        np.fill_diagonal(m, 0.0)
        return m


def poisson_law(lam: float, a: Sequence[float], **kw) -> OffspringLaw:
    return OffspringLaw("poisson", lam, tuple(a), **kw)


def binomial_law(lam: float, a: Sequence[float], n: int, **kw) -> OffspringLaw:
    return OffspringLaw("binomial", lam, tuple(a), n=n, **kw)


def _births(law: OffspringLaw, exposure: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Children of each type given, per type j, the number of parents able
    to bear type j (``exposure[..., j]``)."""
    if law.kind == "poisson":
        return rng.poisson(law.lam * np.asarray(law.a) * exposure)
    return rng.binomial(law.sides * exposure, law.lam / law.n)


def offspring(law: OffspringLaw, parent_type: int | None, size: int, rng: np.random.Generator) -> np.ndarray:
    """``size`` independent offspring vectors of one parent of
    ``parent_type`` (1-based; None for an untyped parent)."""
    exposure = np.ones((size, law.d), dtype=np.int64)
    if parent_type is not None:
        exposure[:, parent_type - 1] = 0
    return _births(law, exposure, rng)


@dataclass(frozen=True)
class WalkState:
    s: tuple[int, ...]  # active individuals by type
    t: int = 0
    total_retired: int = 0
    untyped: int = 0  # active untyped ancestors

    @property
    def active(self) -> int:
        return sum(self.s) + self.untyped

    @property
    def total(self) -> int:
        """Individuals born so far, including the initial ones."""
        return self.active + self.total_retired


def start_state(law: OffspringLaw, start=None) -> WalkState:
    """Initial walk state.

    ``start`` may be a 1-based type, a vector of counts, or ``"special"`` for
    one untyped ancestor.  ``None`` picks ``"special"`` when the law has
    ``special_first_step`` and type 1 otherwise.
    """
    if start is None:
        start = SPECIAL if law.special_first_step else 1
    if isinstance(start, str):
        if start != SPECIAL:
            raise ValueError(f"unknown start {start!r}")
        return WalkState(s=(0,) * law.d, untyped=1)
    if isinstance(start, (int, np.integer)):
        if not 1 <= start <= law.d:
            raise ValueError(f"start type {start} outside [1, {law.d}]")
        s = [0] * law.d
        s[start - 1] = 1
        return WalkState(s=tuple(s))
    s = tuple(int(x) for x in start)
    if len(s) != law.d or min(s) < 0:
        raise ValueError("start vector must hold d nonnegative counts")
    return WalkState(s=s)


def walk_step(state: WalkState, law: OffspringLaw, rng: np.random.Generator) -> WalkState:
    """Retire one active individual chosen uniformly at random, after it
    bears its children."""
    active = state.active
    if active == 0:
        raise ValueError("walk_step on a dead process")
    k = int(rng.integers(active))
    s = list(state.s)
    untyped = state.untyped
    if k < untyped:
        kids = offspring(law, None, 1, rng)[0]
        untyped -= 1
    else:
        k -= untyped
        i = 0
        while k >= s[i]:
            k -= s[i]
            i += 1
        kids = offspring(law, i + 1, 1, rng)[0]
        s[i] -= 1
    s = tuple(int(x + y) for x, y in zip(s, kids))
    return WalkState(s=s, t=state.t + 1, total_retired=state.total_retired + 1, untyped=untyped)


class Progeny(NamedTuple):
    size: int  # total progeny, or the total born when the cap was hit
    exceeded: bool


def total_progeny(law: OffspringLaw, start, cap: int, rng: np.random.Generator) -> Progeny:
    """Run the walk until it dies or ``cap`` individuals have been born."""
    state = start_state(law, start)
    if cap < state.active:
        raise ValueError("cap is smaller than the initial population")
    while state.active:
        if state.total >= cap:
            return Progeny(state.total, True)
        state = walk_step(state, law, rng)
    return Progeny(state.total, state.total >= cap)


def _block(law: OffspringLaw, start: WalkState, trials: int, cap: int, rng) -> tuple[np.ndarray, np.ndarray]:
    z = np.tile(np.array(start.s, dtype=np.int64), (trials, 1))
    untyped = np.full(trials, start.untyped, dtype=np.int64)
    total = z.sum(axis=1) + untyped
    exceeded = total >= cap
    live = np.flatnonzero(~exceeded & (total > 0))
    while live.size:
        zl = z[live]
        # a type-j child can come from any parent not of type j
        exposure = zl.sum(axis=1, keepdims=True) - zl + untyped[live, None]
        kids = _births(law, exposure, rng)
        z[live] = kids
        untyped[live] = 0
        total[live] += kids.sum(axis=1)
        hit = total[live] >= cap
        exceeded[live[hit]] = True
        live = live[~hit & (kids.sum(axis=1) > 0)]
    return total, exceeded


def _block_rng(seed: int, block: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(block,)))


def progeny_sizes(law: OffspringLaw, start, trials: int, cap: int, seed: int,
                  workers: int = 1) -> tuple[np.ndarray, np.ndarray]:
    """Total progeny of ``trials`` independent processes.

    Returns ``(sizes, exceeded)``; where ``exceeded`` is set the process
    reached ``cap`` births and ``sizes`` holds the count at that moment.
    Trials are grouped in fixed blocks with one RNG stream per block, so the
    output depends on ``seed`` only, not on ``workers``.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    state = start_state(law, start)
    if cap < state.active:
        raise ValueError("cap is smaller than the initial population")
    spans = [(b, lo, min(lo + BLOCK, trials)) for b, lo in enumerate(range(0, trials, BLOCK))]

    def job(span):
        b, lo, hi = span
        return _block(law, state, hi - lo, cap, _block_rng(seed, b))

    if workers > 1 and len(spans) > 1:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(job, spans))
    else:
        parts = [job(s) for s in spans]
    return np.concatenate([p[0] for p in parts]), np.concatenate([p[1] for p in parts])


def survival_probability(law: OffspringLaw, start, trials: int, cap: int, seed: int,
                         workers: int = 1) -> float:
    """Fraction of trials reaching ``cap`` births.

    Estimates ``1 - q_i`` from type i, or ``1 - q`` from an untyped
    ancestor.  Truncation biases it upward by P(cap <= T < inf).
    """
    _, exceeded = progeny_sizes(law, start, trials, cap, seed, workers)
    return float(exceeded.mean())

