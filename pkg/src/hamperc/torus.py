"""Geometry and index arithmetic for the d-dimensional Hamming torus.

Vertices are the integer points 1 <= x_i <= L_i.  Two vertices are adjacent
when they differ in exactly one coordinate, so every axis-parallel line is a
clique.  Vertices are stored by a 0-based mixed-radix index with the last
coordinate varying fastest (numpy C order).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

INDEX_LIMIT = np.iinfo(np.int64).max


@dataclass(frozen=True)
class TorusSpec:
    """Shape of a Hamming torus: real aspect ratios ``a``, scale ``n`` and
    the integer side lengths ``L`` actually simulated."""

    d: int
    a: tuple[float, ...]
    n: int
    L: tuple[int, ...]

    @property
    def size(self) -> int:
        return math.prod(self.L)

    @property
    def strides(self) -> tuple[int, ...]:
        out = []
        s = 1
        for side in reversed(self.L):
            out.append(s)
            s *= side
        return tuple(reversed(out))

    @property
    def degree(self) -> int:
        return sum(side - 1 for side in self.L)

    def index(self, coords: Sequence[int]) -> int:
        """Index of the vertex with 1-based ``coords``."""
        if len(coords) != self.d:
            raise ValueError(f"expected {self.d} coordinates, got {len(coords)}")
        k = 0
        for x, side in zip(coords, self.L):
            if not 1 <= x <= side:
                raise ValueError(f"coordinate {x} outside [1, {side}]")
            k = k * side + (x - 1)
        return k

    def coords(self, index: int) -> tuple[int, ...]:
        """1-based coordinates of vertex ``index``."""
        if not 0 <= index < self.size:
            raise ValueError(f"index {index} outside [0, {self.size})")
        out = []
        for side in reversed(self.L):
            index, r = divmod(index, side)
            out.append(r + 1)
        return tuple(reversed(out))

    def line_count(self, axis: int) -> int:
        """Number of lines parallel to ``axis`` (1-based)."""
        _check_axis(self, axis)
        return self.size // self.L[axis - 1]


def make_spec(d: int, a: Sequence[float], n: int) -> TorusSpec:
    """Build a torus with sides ``L_i = round(a_i * n)`` (half rounds up,
    clamped to at least 1)."""
    if d < 1:
        raise ValueError("d must be >= 1")
    a = tuple(float(x) for x in a)
    if len(a) != d:
        raise ValueError(f"expected {d} aspect ratios, got {len(a)}")
    if any(not math.isfinite(x) or x <= 0 for x in a):
        raise ValueError("aspect ratios must be positive and finite")
    if int(n) != n or n < 1:
        raise ValueError("n must be a positive integer")
    n = int(n)
    L = tuple(max(1, math.floor(x * n + 0.5)) for x in a)
    if math.prod(L) > INDEX_LIMIT:
        raise ValueError(f"torus with sides {L} exceeds the 64-bit index range")
    return TorusSpec(d=d, a=a, n=n, L=L)


def _check_axis(spec: TorusSpec, axis: int) -> None:
    if not 1 <= axis <= spec.d:
        raise ValueError(f"axis {axis} outside [1, {spec.d}]")


def neighbors_on_axis(spec: TorusSpec, v: int, axis: int) -> list[int]:
    """The ``L_axis - 1`` vertices differing from ``v`` only along ``axis``,
    in ascending order of that coordinate."""
    _check_axis(spec, axis)
    stride = spec.strides[axis - 1]
    side = spec.L[axis - 1]
    c = (v // stride) % side
    base = v - c * stride
    return [base + m * stride for m in range(side) if m != c]


def neighbors(spec: TorusSpec, v: int) -> Iterator[int]:
    for axis in range(1, spec.d + 1):
        yield from neighbors_on_axis(spec, v, axis)


def hamming_distance(u: Sequence[int], v: Sequence[int]) -> int:
    """Number of coordinates in which ``u`` and ``v`` differ."""
    if len(u) != len(v):
        raise ValueError("vertices have different dimension")
    return sum(x != y for x, y in zip(u, v))


def axis_of(spec: TorusSpec, u: int, v: int) -> int | None:
    """Axis (1-based) of the line through adjacent ``u`` and ``v``; None if
    they are not adjacent."""
    diff = [i for i, (x, y) in enumerate(zip(spec.coords(u), spec.coords(v))) if x != y]
    return diff[0] + 1 if len(diff) == 1 else None


def line_keys(spec: TorusSpec, indices: np.ndarray, axis: int) -> np.ndarray:
    """Line identifier for each vertex index on lines parallel to ``axis``:
    the index with that coordinate zeroed."""
    _check_axis(spec, axis)
    stride = spec.strides[axis - 1]
    side = spec.L[axis - 1]
    indices = np.asarray(indices, dtype=np.int64)
    return indices - ((indices // stride) % side) * stride
