"""Deterministic synthetic workloads and exact input statistics.

Three families: uniform(mu) draws keys i.i.d. on [0, mu); exponential(lambda)
takes floor of a continuous exponential variate; zipfian(s) draws ranks
1..n with probability proportional to rank^-s via exact rejection-inversion.
Values are random words of the key width from the same stream.

Generation is blocked: each fixed-size block gets its own counter-based
(Philox) stream keyed by (seed, family, block index), so output depends
only on the spec — never on worker count or scheduling.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass

import numpy as np

from .adapters import KeyAdapter
from .errors import ConfigurationError
from .hashing import mix64, mix64_pair
from .parallel import WorkerPool
from .records import RecordArray

FAMILIES = ("uniform", "exponential", "zipfian")
GEN_BLOCK = 1 << 18

#: Heavy-frequency statistic threshold multiplier (records whose key
#: occurs more than 500*log2(n) times).
HEAVY_STAT_FACTOR = 500


@dataclass(frozen=True)
class DistributionSpec:
    family: str
    parameter: float
    n: int
    key_width: int = 64
    seed: int = 1

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ConfigurationError(f"unknown family {self.family!r}")
        if self.n < 0:
            raise ConfigurationError("n must be >= 0")
        if self.key_width not in (32, 64, 128):
            raise ConfigurationError("key_width must be 32, 64 or 128")
        if self.family == "uniform":
            if self.parameter < 1 or self.parameter != int(self.parameter):
                raise ConfigurationError("uniform mu must be a positive integer")
            if self.key_width == 32 and self.parameter > 2**32:
                raise ConfigurationError("uniform mu exceeds 32-bit keys")
        elif self.parameter <= 0:
            raise ConfigurationError(f"{self.family} parameter must be > 0")


@dataclass(frozen=True)
class InputStats:
    distinct_keys: int
    max_frequency: int
    heavy_freq_ratio: float


def _block_rng(spec: DistributionSpec, block: int) -> np.random.Generator:
    family_tag = FAMILIES.index(spec.family) + 1
    key = mix64_pair(mix64_pair(spec.seed, family_tag), block)
    return np.random.Generator(np.random.Philox(key=key))


def _zipf_block(rng: np.random.Generator, count: int, s: float, n: int) -> np.ndarray:
    """Exact bounded Zipf sampling by rejection-inversion.

    Ranks r in [1, n] with P(r) proportional to r^-s, for any s > 0.
    Uses the hat H(x) = integral of x^-s, inverting uniform draws on
    [H(1.5)-1, H(n+0.5)] and rejecting to correct the discretization.
    """
    if s == 1.0:
        h_int = np.log
        h_inv = np.exp
    else:
        one_minus = 1.0 - s

        def h_int(x):
            return np.expm1(one_minus * np.log(x)) / one_minus

        def h_inv(x):
            return np.exp(np.log1p(x * one_minus) / one_minus)

    def h(x):
        return np.exp(-s * np.log(x))

    lo = h_int(1.5) - 1.0
    hi = h_int(n + 0.5)
    # Acceptance shortcut constant from the hat's tangent at k=2.
    shortcut = 2.0 - float(h_inv(h_int(2.5) - h(2.0)))

    out = np.empty(count, dtype=np.float64)
    pending = np.arange(count)
    while len(pending):
        u = lo + rng.random(len(pending)) * (hi - lo)
        x = h_inv(u)
        k = np.clip(np.floor(x + 0.5), 1.0, float(n))
        accept = (k - x <= shortcut) | (u >= h_int(k + 0.5) - h(k))
        out[pending[accept]] = k[accept]
        pending = pending[~accept]
    return out.astype(np.uint64)


def _keys_block(spec: DistributionSpec, rng: np.random.Generator,
                count: int) -> np.ndarray:
    if spec.family == "uniform":
        return rng.integers(0, int(spec.parameter), size=count, dtype=np.uint64)
    if spec.family == "exponential":
        draws = rng.exponential(scale=1.0 / spec.parameter, size=count)
        return np.floor(draws).astype(np.uint64)
    return _zipf_block(rng, count, float(spec.parameter), spec.n)


def generate(spec: DistributionSpec, *, workers: int | None = None) -> RecordArray:
    """Materialize a workload; identical bytes for identical specs."""
    n = spec.n
    width = spec.key_width
    if width == 32:
        keys = np.empty(n, dtype=np.uint32)
        values = np.empty(n, dtype=np.uint32)
    elif width == 64:
        keys = np.empty(n, dtype=np.uint64)
        values = np.empty(n, dtype=np.uint64)
    else:
        keys = np.zeros((n, 2), dtype=np.uint64)
        values = np.empty((n, 2), dtype=np.uint64)

    def fill(block: int) -> None:
        lo = block * GEN_BLOCK
        hi = min(lo + GEN_BLOCK, n)
        rng = _block_rng(spec, block)
        drawn = _keys_block(spec, rng, hi - lo)
        count = hi - lo
        if width == 32:
            keys[lo:hi] = drawn.astype(np.uint32)
            values[lo:hi] = rng.integers(0, 2**32 - 1, size=count,
                                         dtype=np.uint32, endpoint=True)
        elif width == 64:
            keys[lo:hi] = drawn
            values[lo:hi] = rng.integers(0, 2**64 - 1, size=count,
                                         dtype=np.uint64, endpoint=True)
        else:
            keys[lo:hi, 0] = drawn
            values[lo:hi] = rng.integers(0, 2**64 - 1, size=(count, 2),
                                         dtype=np.uint64, endpoint=True)

    blocks = list(range(-(-n // GEN_BLOCK))) if n else []
    with WorkerPool(workers) as pool:
        pool.map(fill, blocks)
    kind = {32: "u32", 64: "u64", 128: "u128"}[width]
    return RecordArray(keys, values, kind)


def heavy_stat_threshold(n: int) -> float:
    return HEAVY_STAT_FACTOR * math.log2(max(n, 2))


def compute_stats(data: RecordArray, adapter: KeyAdapter | None = None) -> InputStats:
    """Exact workload statistics via a sequential counting pass (oracle-grade)."""
    n = len(data)
    if n == 0:
        return InputStats(0, 0, 0.0)
    if data.key_kind == "bytes":
        counts = np.asarray(
            sorted(Counter(adapter.canonical_list(data, np.arange(n))).values()),
            dtype=np.int64,
        )
    elif data.key_kind == "u128":
        order = np.lexsort((data.keys[:, 0], data.keys[:, 1]))
        rows = data.keys[order]
        change = np.empty(n, dtype=bool)
        change[0] = True
        change[1:] = (rows[1:] != rows[:-1]).any(axis=1)
        counts = np.diff(np.append(np.flatnonzero(change), n))
    else:
        _, counts = np.unique(data.keys, return_counts=True)
    threshold = heavy_stat_threshold(n)
    heavy_records = int(counts[counts > threshold].sum())
    return InputStats(
        distinct_keys=int(len(counts)),
        max_frequency=int(counts.max()),
        heavy_freq_ratio=heavy_records / n,
    )
