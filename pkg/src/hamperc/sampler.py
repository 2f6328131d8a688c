"""Reproducible Bernoulli site sampling on a Hamming torus.

Vertex ``k`` is occupied iff the ``k``-th 64-bit output of a Philox4x64
stream keyed by the seed, mapped to a 53-bit uniform, falls below ``p``.
Philox is counter based, so any index range can be produced on its own and
chunked generation is bit-identical to a serial pass.
"""

from __future__ import annotations

import math
import os
import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import BinaryIO

import numpy as np

from .torus import TorusSpec, make_spec

MAGIC = b"HTPC"
FORMAT_VERSION = 1

# multiple of 32 so chunk boundaries land on both Philox blocks and packed bytes
CHUNK = 1 << 22

_SEED_MASK = (1 << 64) - 1
# second key word separates site sampling from other uses of the same seed
_SITE_DOMAIN = 0x48545043


@dataclass(frozen=True)
class SiteConfig:
    spec: TorusSpec
    p: float
    seed: int
    occupancy: np.ndarray = field(repr=False)  # packed bits, little bit order
    occupied_count: int

    def mask(self) -> np.ndarray:
        """Boolean occupancy of every vertex, length ``|V|``."""
        return np.unpackbits(self.occupancy, count=self.spec.size, bitorder="little").astype(bool)

    def occupied_indices(self) -> np.ndarray:
        return np.flatnonzero(self.mask())

    def is_occupied(self, v: int) -> bool:
        return bool((self.occupancy[v >> 3] >> (v & 7)) & 1)


def _check_p(p: float) -> float:
    p = float(p)
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"occupation probability {p} outside [0, 1]")
    return p


def occupancy_block(seed: int, p: float, lo: int, hi: int) -> np.ndarray:
    """Occupancy of vertex indices ``[lo, hi)`` as a boolean array.

    ``lo`` must be a multiple of 4 (one Philox block).
    """
    if lo % 4:
        raise ValueError("block start must be a multiple of 4")
    bg = np.random.Philox(key=[int(seed) & _SEED_MASK, _SITE_DOMAIN])
    bg.advance(lo // 4)
    raw = bg.random_raw(hi - lo)
    u = (raw >> np.uint64(11)).astype(np.float64) * 2.0**-53
    return u < p


def sample(spec: TorusSpec, p: float, seed: int, workers: int | None = None) -> SiteConfig:
    """Occupy each vertex of ``spec`` independently with probability ``p``."""
    p = _check_p(p)
    size = spec.size
    bounds = [(lo, min(lo + CHUNK, size)) for lo in range(0, size, CHUNK)]

    def job(b):
        return np.packbits(occupancy_block(seed, p, *b), bitorder="little")

    workers = workers or 1
    if workers > 1 and len(bounds) > 1:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(job, bounds))
    else:
        parts = [job(b) for b in bounds]
    packed = np.concatenate(parts) if parts else np.zeros(0, np.uint8)
    count = int(np.unpackbits(packed, count=size, bitorder="little").sum())
    return SiteConfig(spec, p, int(seed), packed, count)


def from_mask(spec: TorusSpec, mask, p: float = float("nan"), seed: int = 0) -> SiteConfig:
    """Wrap an explicit occupancy mask (tests, hand-built configurations)."""
    mask = np.asarray(mask, dtype=bool).ravel()
    if mask.size != spec.size:
        raise ValueError(f"mask has {mask.size} entries, torus has {spec.size}")
    packed = np.packbits(mask, bitorder="little")
    return SiteConfig(spec, p, seed, packed, int(mask.sum()))


def from_occupied(spec: TorusSpec, coords, **kw) -> SiteConfig:
    mask = np.zeros(spec.size, dtype=bool)
    for c in coords:
        mask[spec.index(c)] = True
    return from_mask(spec, mask, **kw)


def lambda_to_p(spec: TorusSpec, lam: float) -> float:
    """``p = lam / n``."""
    if lam < 0:
        raise ValueError("lambda must be nonnegative")
    p = lam / spec.n
    if p > 1:
        raise ValueError(f"lambda / n = {p} exceeds 1")
    return p


def c_log_to_p(spec: TorusSpec, c: float) -> float:
    """``p = c ln(n) / n``."""
    if c < 0:
        raise ValueError("c must be nonnegative")
    p = c * math.log(spec.n) / spec.n
    if p > 1:
        raise ValueError(f"c ln(n) / n = {p} exceeds 1")
    return p


def default_workers() -> int:
    try:
        return max(1, int(os.environ.get("HTPC_THREADS", "1")))
    except ValueError:
        return 1


# Binary dump: magic, u32 version, u32 d, d x u64 sides, f64 p, u64 seed,
# then ceil(|V| / 8) packed bytes.  All little-endian.

def write_config(config: SiteConfig, fh: BinaryIO) -> None:
    spec = config.spec
    fh.write(MAGIC)
    fh.write(struct.pack("<II", FORMAT_VERSION, spec.d))
    fh.write(struct.pack(f"<{spec.d}Q", *spec.L))
    fh.write(struct.pack("<dQ", config.p, config.seed & _SEED_MASK))
    fh.write(config.occupancy.tobytes())


def read_config(fh: BinaryIO) -> SiteConfig:
    if fh.read(4) != MAGIC:
        raise ValueError("not an HTPC occupancy file")
    version, d = struct.unpack("<II", fh.read(8))
    if version != FORMAT_VERSION:
        raise ValueError(f"unsupported HTPC version {version}")
    L = struct.unpack(f"<{d}Q", fh.read(8 * d))
    p, seed = struct.unpack("<dQ", fh.read(16))
    # the file records only integer sides; treat them as a = L at n = 1
    spec = make_spec(d, L, 1)
    nbytes = (spec.size + 7) // 8
    packed = np.frombuffer(fh.read(nbytes), dtype=np.uint8).copy()
    if packed.size != nbytes:
        raise ValueError("truncated HTPC occupancy payload")
    count = int(np.unpackbits(packed, count=spec.size, bitorder="little").sum())
    return SiteConfig(spec, p, seed, packed, count)
