"""Histogram and collect-reduce over the bucketing machinery.

Heavy keys never move: their mapped values are folded where the records
lie, per subarray in input order and across subarrays in ascending order,
so the result equals a left fold over the whole input — correct for any
associative combine, commutative or not. Light keys flow through the
recursion and are folded in hash-table base cases that combine on
duplicate detection. The input array is left untouched.

Output order is deterministic for a fixed seed: each node emits its heavy
keys in heavy-id order, then its light buckets ascending, depth-first.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .adapters import KeyAdapter
from .core import (
    DEPTH_LIMIT,
    Telemetry,
    _counts_from_ids,
    _rank_within_groups,
    assign_bucket_ids,
    chained_group_order,
    column_major_exclusive_scan,
    sample_and_bucket,
)
from .errors import ConfigurationError
from .hashing import U64_MASK, mix64_pair
from .params import TuningParams
from .parallel import WorkerPool
from .records import RecordArray, copy_rows

_VECTOR_KINDS = (None, "count", "sum64")


@dataclass(frozen=True)
class ReduceSpec:
    """A map function plus an associative monoid (combine, identity).

    ``map_record(key, value)`` receives a record's canonical key and its
    plain-Python value; ``combine`` must be associative with ``identity``
    as two-sided identity. Commutativity is not required — stability makes
    the per-key fold order the input order. ``vector_kind`` marks the two
    built-in monoids with vectorized fast paths.
    """

    map_record: Callable
    combine: Callable
    identity: object
    vector_kind: str | None = None

    def __post_init__(self):
        if self.vector_kind not in _VECTOR_KINDS:
            raise ConfigurationError(f"unknown vector_kind {self.vector_kind!r}")

    @staticmethod
    def counting() -> "ReduceSpec":
        """Histogram monoid: every record maps to 1 under integer addition."""
        return ReduceSpec(lambda key, value: 1, lambda a, b: a + b, 0, "count")

    @staticmethod
    def summing64() -> "ReduceSpec":
        """Modular 64-bit sum of the value column (documented wraparound)."""

        def map_record(key, value):
            if value is None:
                raise ConfigurationError("summing64 needs a value column")
            scalar = value[0] if isinstance(value, tuple) else value
            return scalar & U64_MASK

        return ReduceSpec(
            map_record, lambda a, b: (a + b) & U64_MASK, 0, "sum64"
        )


class KeyedResult:
    """Distinct (key, aggregate) pairs in a deterministic order."""

    __slots__ = ("pairs",)

    def __init__(self, pairs: list):
        self.pairs = pairs

    def __len__(self) -> int:
        return len(self.pairs)

    def __iter__(self):
        return iter(self.pairs)

    def __eq__(self, other) -> bool:
        return isinstance(other, KeyedResult) and self.pairs == other.pairs

    def keys(self) -> list:
        return [key for key, _ in self.pairs]

    def aggregates(self) -> list:
        return [value for _, value in self.pairs]

    def write_csv(self, fh, key_formatter=None) -> None:
        writer = csv.writer(fh)
        writer.writerow(["key", "aggregate"])
        fmt = key_formatter or format_key
        for key, value in self.pairs:
            writer.writerow([fmt(key), format_key(value)])


def format_key(key) -> str:
    if isinstance(key, tuple):
        lo, hi = key
        return str((hi << 64) | lo)
    if isinstance(key, bytes):
        return key.decode("latin-1")
    return str(key)


class _AggRun:
    def __init__(self, adapter: KeyAdapter, spec: ReduceSpec, params: TuningParams,
                 pool: WorkerPool, telemetry: Telemetry):
        self.adapter = adapter
        self.spec = spec
        self.params = params
        self.pool = pool
        self.telemetry = telemetry

    # -- recursion ----------------------------------------------------------

    def node(self, window: RecordArray, level: int, depth: int, path: int,
             parent_size: int | None, stalled: int, out: list) -> None:
        params = self.params
        size = len(window)
        self.telemetry.observe_level(level)
        if parent_size is not None and 2 * size > parent_size:
            stalled += 1
            if stalled == 1:
                rounds = params.rounds_per_hash
                depth = (depth // rounds + 1) * rounds
        if size < params.base_case_cutoff or stalled >= 2 or level >= DEPTH_LIMIT:
            out.extend(self._base_fold(window))
            return

        rng = np.random.Generator(np.random.Philox(key=mix64_pair(params.seed, path)))
        heavy = sample_and_bucket(window, self.adapter, params, depth, rng)
        n_light = params.light_buckets
        n_buckets = n_light + len(heavy)
        ids = assign_bucket_ids(window, heavy, self.adapter, params, depth, self.pool)
        self.telemetry.bucket_assignments += size
        counts = _counts_from_ids(ids, params, n_buckets, self.pool)
        self.telemetry.add_matrix_cells(level, counts.size)

        if len(heavy):
            out.extend(self._heavy_fold(window, ids, counts, heavy))

        light_prefix, light_offsets = column_major_exclusive_scan(counts[:, :n_light])
        light_total = int(light_offsets[-1])
        if light_total == 0:
            return
        child = window.empty_like(light_total)
        self.telemetry.scratch_moves += light_total
        self._distribute_light(window, ids, light_prefix, child)
        for bucket in range(n_light):
            b_lo, b_hi = int(light_offsets[bucket]), int(light_offsets[bucket + 1])
            if b_hi > b_lo:
                self.node(child.view(b_lo, b_hi), level + 1, depth + 1,
                          mix64_pair(path, bucket + 1), size, stalled, out)

    def _distribute_light(self, window: RecordArray, ids: np.ndarray,
                          light_prefix: np.ndarray, child: RecordArray) -> None:
        params = self.params
        n = len(window)
        sub_len = params.subarray_len
        n_light = params.light_buckets
        num_sub = params.num_subarrays(n)

        def work(span: tuple[int, int]) -> None:
            sub_lo, sub_hi = span
            a, b = sub_lo * sub_len, min(sub_hi * sub_len, n)
            pos = np.arange(a, b, dtype=np.int64)
            seg = ids[a:b].astype(np.int64)
            light = seg < n_light
            pos, seg = pos[light], seg[light]
            sub_abs = pos // sub_len
            rank = _rank_within_groups((sub_abs - sub_lo) * n_light + seg)
            dest = light_prefix[sub_abs, seg] + rank
            copy_rows(child, dest, window, pos)

        spans = self.pool.chunks(num_sub)
        self.pool.map(work, spans)

    # -- folds ---------------------------------------------------------------

    def _map_u64(self, window: RecordArray, pos: np.ndarray) -> np.ndarray:
        if window.values is None:
            raise ConfigurationError("summing64 needs a value column")
        vals = window.values[pos]
        if vals.ndim == 2:
            vals = vals[:, 0]
        return vals.astype(np.uint64, copy=False)

    def _heavy_fold(self, window: RecordArray, ids: np.ndarray,
                    counts: np.ndarray, heavy) -> list:
        spec = self.spec
        n_light = self.params.light_buckets
        n_heavy = len(heavy)
        if spec.vector_kind == "count":
            totals = counts[:, n_light:].sum(axis=0)
            return [(heavy.keys[t], int(totals[t])) for t in range(n_heavy)]
        hpos = np.flatnonzero(ids >= n_light)
        slot = ids[hpos].astype(np.int64) - n_light
        if spec.vector_kind == "sum64":
            acc = np.zeros(n_heavy, dtype=np.uint64)
            np.add.at(acc, slot, self._map_u64(window, hpos))
            return [(heavy.keys[t], int(acc[t])) for t in range(n_heavy)]
        order = np.argsort(slot, kind="stable")  # per key, input order
        hpos, slot = hpos[order], slot[order]
        starts = np.flatnonzero(np.diff(slot, prepend=-1))
        bounds = np.append(starts, len(slot))
        pairs = []
        for g in range(len(starts)):
            members = hpos[bounds[g] : bounds[g + 1]]
            t = int(slot[starts[g]])
            pairs.append((heavy.keys[t], self._fold_positions(window, members)))
        return pairs

    def _fold_positions(self, window: RecordArray, pos: np.ndarray):
        spec = self.spec
        adapter = self.adapter
        key = adapter.canonical(window, int(pos[0]))
        acc = spec.identity
        for p in pos.tolist():
            acc = spec.combine(acc, spec.map_record(key, window.value_at(p)))
        return acc

    def _base_fold(self, window: RecordArray) -> list:
        m = len(window)
        if m == 0:
            return []
        spec = self.spec
        adapter = self.adapter
        gid, first_pos = adapter.group_block(window, 0, m)
        groups = len(first_pos)
        order = chained_group_order(window, adapter, first_pos)
        keys = adapter.canonical_list(window, first_pos)
        if spec.vector_kind == "count":
            totals = np.bincount(gid, minlength=groups)
            return [(keys[g], int(totals[g])) for g in order.tolist()]
        if spec.vector_kind == "sum64":
            acc = np.zeros(groups, dtype=np.uint64)
            np.add.at(acc, gid, self._map_u64(window, np.arange(m)))
            return [(keys[g], int(acc[g])) for g in order.tolist()]
        member_order = np.argsort(gid, kind="stable")
        sorted_gid = gid[member_order]
        starts = np.flatnonzero(np.diff(sorted_gid, prepend=-1))
        bounds = np.append(starts, m)
        folded = [None] * groups
        for g in range(groups):
            members = member_order[bounds[g] : bounds[g + 1]]
            folded[int(sorted_gid[starts[g]])] = self._fold_positions(window, members)
        return [(keys[g], folded[g]) for g in order.tolist()]


def collect_reduce(data: RecordArray, adapter: KeyAdapter, spec: ReduceSpec,
                   params: TuningParams | None = None, *,
                   workers: int | None = None,
                   telemetry: Telemetry | None = None) -> KeyedResult:
    """Per-key left fold of mapped values under an associative monoid.

    For every distinct key the aggregate equals folding ``combine`` over
    ``map_record`` of its records in input order. The input array is not
    modified.
    """
    n = len(data)
    if params is None:
        params = TuningParams.for_input(n)
    elif params.input_size != n:
        raise ConfigurationError(
            f"params derived for n={params.input_size} used on n={n}"
        )
    telemetry = telemetry if telemetry is not None else Telemetry()
    out: list = []
    with WorkerPool(workers) as pool:
        run = _AggRun(adapter, spec, params, pool, telemetry)
        run.node(data, level=1, depth=0, path=0, parent_size=None,
                 stalled=0, out=out)
    return KeyedResult(out)


def histogram(data: RecordArray, adapter: KeyAdapter,
              params: TuningParams | None = None, *,
              workers: int | None = None,
              telemetry: Telemetry | None = None) -> KeyedResult:
    """One (key, multiplicity) pair per distinct key; counts sum to n."""
    return collect_reduce(data, adapter, ReduceSpec.counting(), params,
                          workers=workers, telemetry=telemetry)
