"""Recursive parallel semisort: the core bucketing machinery.

Each recursion node runs three phases:

1. *sampling and bucketing* — uniform samples with replacement identify
   heavy keys, which receive dedicated buckets; the remaining (light)
   keys share ``2^b`` buckets addressed by a b-bit slice of their hash;
2. *blocked distributing* — fixed-length subarrays are counted into an
   exact (subarray x bucket) matrix, a column-major exclusive scan turns
   the counts into per-subarray write cursors, and every record moves to
   the companion buffer through disjoint cursor ranges (race-free and
   stable);
3. *local refining* — heavy buckets are final after distribution; light
   buckets recurse with the two buffers' roles swapped until they fit
   the base-case cutoff, then are resolved by a chained-hash grouping
   (eq mode) or a stable comparison sort (lt mode), and whatever ends up
   in the scratch buffer is copied back to the caller's array.

For a fixed seed the output is byte-identical at any worker count: every
parallel write lands in an index range computed before the parallel phase
starts, and per-node sample streams are derived from the seed and the
recursion path rather than from scheduling order.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .adapters import KeyAdapter
from .errors import ConfigurationError, ContractError
from .hashing import mix64, mix64_array, mix64_pair
from .params import TuningParams
from .parallel import WorkerPool
from .records import RecordArray, copy_rows, permute_in_place

#: Hard recursion ceiling; reaching it falls back to a base case, never errors.
DEPTH_LIMIT = 64


@dataclass
class Telemetry:
    """Counters exposed for tests, the CLI and the acceptance suite."""

    max_depth: int = 0
    nodes: int = 0
    scratch_allocations: int = 0
    scratch_moves: int = 0
    bucket_assignments: int = 0
    matrix_cells_by_level: dict[int, int] = field(default_factory=dict)

    def observe_level(self, level: int, count: int = 1) -> None:
        self.nodes += count
        if level > self.max_depth:
            self.max_depth = level

    def add_matrix_cells(self, level: int, cells: int) -> None:
        self.matrix_cells_by_level[level] = (
            self.matrix_cells_by_level.get(level, 0) + cells
        )


class HeavyTable:
    """Maps heavy keys to dedicated bucket ids ``n_light .. n_light+n_heavy``.

    Ids are consecutive in key-discovery order. Lookup resolves by hash
    then exact key equality; the vectorized path keeps hash-sorted side
    arrays plus packed key content for bulk verification.
    """

    def __init__(self, n_light: int):
        self.n_light = n_light
        self._ids: dict = {}
        self.keys: list = []
        self.hashes: list[int] = []
        self.sorted_hashes: np.ndarray | None = None
        self.sorted_slots: np.ndarray | None = None
        self.packed = None
        self.max_run = 0

    def __len__(self) -> int:
        return len(self.keys)

    def insert(self, key, key_hash: int) -> int:
        bucket = self.n_light + len(self.keys)
        self._ids[key] = bucket
        self.keys.append(key)
        self.hashes.append(key_hash)
        return bucket

    def lookup(self, key) -> int | None:
        return self._ids.get(key)

    def finalize(self, adapter: KeyAdapter) -> "HeavyTable":
        hashes = np.asarray(self.hashes, dtype=np.uint64)
        order = np.argsort(hashes, kind="stable")
        self.sorted_hashes = hashes[order]
        self.sorted_slots = order.astype(np.int64)
        self.packed = adapter.pack_keys(self.keys)
        if len(hashes):
            _, counts = np.unique(self.sorted_hashes, return_counts=True)
            self.max_run = int(counts.max())
        return self


@dataclass
class BucketPlan:
    """Per-node distribution artifacts: heavy table, counts, cursors."""

    heavy: HeavyTable
    counts: np.ndarray  # (num_subarrays, n_light + n_heavy)
    prefix: np.ndarray  # same shape; column-major exclusive scan of counts
    offsets: np.ndarray  # (n_buckets + 1,) bucket start positions


@dataclass
class WorkBuffers:
    """The caller's array plus one equal-sized scratch; recursion swaps roles."""

    primary: RecordArray
    scratch: RecordArray
    live_in_primary: bool = True

    @property
    def live(self) -> RecordArray:
        return self.primary if self.live_in_primary else self.scratch

    @property
    def spare(self) -> RecordArray:
        return self.scratch if self.live_in_primary else self.primary


# ---------------------------------------------------------------------------
# bucket ids
# ---------------------------------------------------------------------------


def _light_id_scalar(key_hash: int, depth: int, params: TuningParams) -> int:
    rnd, slot = divmod(depth, params.rounds_per_hash)
    if rnd:
        key_hash = mix64_pair(key_hash, rnd)
    return (key_hash >> (slot * params.light_bits)) & (params.light_buckets - 1)


def _light_ids_array(hashes: np.ndarray, depth: int, params: TuningParams) -> np.ndarray:
    rnd, slot = divmod(depth, params.rounds_per_hash)
    if rnd:
        hashes = mix64_array(hashes ^ np.uint64(mix64(rnd)))
    shifted = hashes >> np.uint64(slot * params.light_bits)
    return (shifted & np.uint64(params.light_buckets - 1)).astype(np.int32)


def get_bucket_id(key, heavy: HeavyTable | None, adapter: KeyAdapter,
                  params: TuningParams, depth: int = 0) -> int:
    """Bucket id of a canonical key at a recursion depth.

    Heavy keys resolve through the table; light keys take bits
    ``[depth*b, depth*b + b)`` of their hash, remixed with a round salt
    once the 64 hash bits are exhausted.
    """
    if heavy is not None and len(heavy):
        bucket = heavy.lookup(key)
        if bucket is not None:
            return bucket
    return _light_id_scalar(adapter.hash_scalar(key), depth, params)


def assign_bucket_ids(data: RecordArray, heavy: HeavyTable, adapter: KeyAdapter,
                      params: TuningParams, depth: int = 0,
                      pool: WorkerPool | None = None) -> np.ndarray:
    """Vectorized :func:`get_bucket_id` over a whole subproblem window."""
    n = len(data)
    ids = np.empty(n, dtype=np.int32)
    if n == 0:
        return ids

    def work(span: tuple[int, int]) -> None:
        a, b = span
        hashes = adapter.hash_block(data, a, b)
        out = _light_ids_array(hashes, depth, params)
        if len(heavy):
            _resolve_heavy_ids(out, data, a, hashes, heavy, adapter)
        ids[a:b] = out

    if pool is None:
        work((0, n))
    else:
        pool.map(work, pool.chunks(n))
    return ids


def _resolve_heavy_ids(out: np.ndarray, data: RecordArray, base: int,
                       hashes: np.ndarray, heavy: HeavyTable,
                       adapter: KeyAdapter) -> None:
    table_hashes = heavy.sorted_hashes
    n_entries = len(table_hashes)
    pos = np.searchsorted(table_hashes, hashes)
    matched = np.zeros(len(hashes), dtype=bool)
    for step in range(heavy.max_run):
        probe = pos + step
        viable = ~matched & (probe < n_entries)
        sel = np.flatnonzero(viable)
        if not len(sel):
            break
        sel = sel[table_hashes[probe[sel]] == hashes[sel]]
        if not len(sel):
            break
        slots = heavy.sorted_slots[probe[sel]]
        verified = adapter.match_packed(data, base + sel, heavy.packed, slots)
        hit = sel[verified]
        out[hit] = heavy.n_light + slots[verified]
        matched[hit] = True


# ---------------------------------------------------------------------------
# sampling and bucketing
# ---------------------------------------------------------------------------


def sample_and_bucket(data: RecordArray, adapter: KeyAdapter, params: TuningParams,
                      depth: int = 0, rng: np.random.Generator | None = None) -> HeavyTable:
    """Draw samples, count them per key, and build the heavy table.

    Samples min(n', sample_count) keys uniformly with replacement; keys
    reaching ``heavy_threshold`` sample occurrences (log2 of the top-level
    input size) become heavy, capped at ``max_heavy`` keeping the most
    sampled (ties by first appearance in the sample stream). Counting is
    sequential on purpose — it is cheap and keeps the stream order
    deterministic.
    """
    table = HeavyTable(params.light_buckets)
    n = len(data)
    draws = min(n, params.sample_count)
    if draws == 0 or params.max_heavy == 0:
        return table.finalize(adapter)
    if rng is None:
        rng = np.random.Generator(np.random.Philox(key=params.seed))
    positions = rng.integers(0, n, size=draws)
    sampled = adapter.canonical_list(data, positions)
    counts: dict = {}
    for stream_pos, key in enumerate(sampled):
        entry = counts.get(key)
        if entry is None:
            counts[key] = [1, stream_pos]
        else:
            entry[0] += 1
    threshold = params.heavy_threshold
    heavy_keys = [
        (key, entry[0], entry[1])
        for key, entry in counts.items()
        if entry[0] >= threshold
    ]
    if len(heavy_keys) > params.max_heavy:
        heavy_keys.sort(key=lambda item: (-item[1], item[2]))
        heavy_keys = heavy_keys[: params.max_heavy]
        heavy_keys.sort(key=lambda item: item[2])  # back to discovery order
    for key, _, _ in heavy_keys:
        table.insert(key, adapter.hash_scalar(key))
    return table.finalize(adapter)


# ---------------------------------------------------------------------------
# blocked distributing
# ---------------------------------------------------------------------------


def _counts_from_ids(ids: np.ndarray, params: TuningParams, n_buckets: int,
                     pool: WorkerPool | None = None) -> np.ndarray:
    n = len(ids)
    sub_len = params.subarray_len
    num_sub = params.num_subarrays(n)
    counts = np.zeros((num_sub, n_buckets), dtype=np.int64)

    def work(span: tuple[int, int]) -> None:
        sub_lo, sub_hi = span
        a, b = sub_lo * sub_len, min(sub_hi * sub_len, n)
        rel_sub = np.arange(a, b, dtype=np.int64) // sub_len - sub_lo
        flat = np.bincount(
            rel_sub * n_buckets + ids[a:b],
            minlength=(sub_hi - sub_lo) * n_buckets,
        )
        counts[sub_lo:sub_hi] = flat.reshape(sub_hi - sub_lo, n_buckets)

    spans = pool.chunks(num_sub) if pool is not None else [(0, num_sub)]
    if pool is None:
        for span in spans:
            work(span)
    else:
        pool.map(work, spans)
    return counts


def count_into_matrix(data: RecordArray, heavy: HeavyTable, adapter: KeyAdapter,
                      params: TuningParams, depth: int = 0,
                      pool: WorkerPool | None = None) -> np.ndarray:
    """Exact per-(subarray, bucket) record counts for a subproblem."""
    ids = assign_bucket_ids(data, heavy, adapter, params, depth, pool)
    return _counts_from_ids(ids, params, params.light_buckets + len(heavy), pool)


def column_major_exclusive_scan(counts: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Exclusive prefix sums of the counting matrix in column-major order.

    Returns ``(prefix, offsets)``: ``prefix[i][j]`` is the destination
    cursor of subarray i's first record for bucket j, and ``offsets[j]``
    the start of bucket j (with a final total entry).
    """
    num_sub, n_buckets = counts.shape
    flat = counts.T.reshape(-1)
    running = np.empty(len(flat) + 1, dtype=np.int64)
    running[0] = 0
    np.cumsum(flat, out=running[1:])
    prefix = running[:-1].reshape(n_buckets, num_sub).T.copy()
    offsets = np.empty(n_buckets + 1, dtype=np.int64)
    offsets[:n_buckets] = prefix[0] if num_sub else 0
    offsets[n_buckets] = running[-1]
    return prefix, offsets


def _rank_within_groups(composite: np.ndarray) -> np.ndarray:
    """rank[i] = #j<i with composite[j] == composite[i] (vectorized)."""
    m = len(composite)
    if m == 0:
        return np.zeros(0, dtype=np.int64)
    order = np.argsort(composite, kind="stable")
    boundary = np.empty(m, dtype=bool)
    boundary[0] = True
    sorted_comp = composite[order]
    boundary[1:] = sorted_comp[1:] != sorted_comp[:-1]
    starts = np.flatnonzero(boundary)
    sizes = np.diff(np.append(starts, m))
    rank_sorted = np.arange(m, dtype=np.int64) - np.repeat(starts, sizes)
    rank = np.empty(m, dtype=np.int64)
    rank[order] = rank_sorted
    return rank


def _distribute_ids(src: RecordArray, dst: RecordArray, base: int, ids: np.ndarray,
                    prefix: np.ndarray, params: TuningParams, n_buckets: int,
                    pool: WorkerPool | None = None) -> None:
    """Move the node's records src[base:base+n'] into dst by bucket cursor."""
    n = len(ids)
    sub_len = params.subarray_len
    num_sub = params.num_subarrays(n)

    def work(span: tuple[int, int]) -> None:
        sub_lo, sub_hi = span
        a, b = sub_lo * sub_len, min(sub_hi * sub_len, n)
        pos = np.arange(a, b, dtype=np.int64)
        seg = ids[a:b].astype(np.int64)
        sub_abs = pos // sub_len
        rank = _rank_within_groups((sub_abs - sub_lo) * n_buckets + seg)
        dest = prefix[sub_abs, seg] + rank
        copy_rows(dst, base + dest, src, base + pos)

    spans = pool.chunks(num_sub) if pool is not None else [(0, num_sub)]
    if pool is None:
        for span in spans:
            work(span)
    else:
        pool.map(work, spans)


def distribute(data: RecordArray, prefix: np.ndarray, heavy: HeavyTable,
               adapter: KeyAdapter, params: TuningParams, depth: int,
               dest: RecordArray, *, ids: np.ndarray | None = None,
               pool: WorkerPool | None = None) -> None:
    """Place each record of ``data`` into its bucket region of ``dest``.

    Within a bucket records land in (subarray, in-subarray position)
    order — the input order — which is what makes the semisort stable.
    ``dest`` must be a disjoint array of the same length.
    """
    if len(dest) != len(data):
        raise ConfigurationError("destination must match the subproblem size")
    if ids is None:
        ids = assign_bucket_ids(data, heavy, adapter, params, depth, pool)
    _distribute_ids(data, dest, 0, ids, prefix, params,
                    params.light_buckets + len(heavy), pool)


# ---------------------------------------------------------------------------
# base cases
# ---------------------------------------------------------------------------


def chained_group_order(data: RecordArray, adapter: KeyAdapter,
                        first_pos: np.ndarray) -> np.ndarray:
    """Group emission order of the chained-hash base case.

    Groups (one per distinct key, identified by their first-occurrence
    index) come out ordered by table cell — hash modulo the capacity, the
    smallest power of two >= 2*len — then by arrival within the cell.
    """
    groups = len(first_pos)
    reps = data.gather(first_pos)
    rep_hash = adapter.hash_block(reps, 0, groups)
    capacity = 1 << max(1, 2 * len(data) - 1).bit_length()
    cells = (rep_hash & np.uint64(capacity - 1)).astype(np.int64)
    return np.lexsort((first_pos, cells))


def base_case_eq(data: RecordArray, adapter: KeyAdapter) -> None:
    """Stable semisort of a small slice via chained-hash grouping semantics.

    Equivalent to inserting every record into a chained hash table and
    repacking cells in index order, chains in insertion order: groups
    appear by (cell, first arrival) and records keep input order inside
    each group.
    """
    m = len(data)
    if m < 2:
        return
    gid, first_pos = adapter.group_block(data, 0, m)
    groups = len(first_pos)
    if groups == 1:
        return
    chain_order = chained_group_order(data, adapter, first_pos)
    group_rank = np.empty(groups, dtype=np.int64)
    group_rank[chain_order] = np.arange(groups)
    permute_in_place(data, np.argsort(group_rank[gid], kind="stable"))


def base_case_lt(data: RecordArray, adapter: KeyAdapter) -> None:
    """Stable comparison sort of a small slice (a sorted slice is semisorted)."""
    if len(data) < 2:
        return
    permute_in_place(data, adapter.sort_block(data, 0, len(data)))


# ---------------------------------------------------------------------------
# the recursion
# ---------------------------------------------------------------------------


class _SortRun:
    def __init__(self, buffers: WorkBuffers, adapter: KeyAdapter, mode: str,
                 params: TuningParams, pool: WorkerPool, telemetry: Telemetry):
        self.buffers = buffers
        self.adapter = adapter
        self.mode = mode
        self.params = params
        self.pool = pool
        self.telemetry = telemetry

    def node(self, lo: int, hi: int, level: int, depth: int, live_primary: bool,
             path: int, parent_size: int | None, stalled: int) -> None:
        params = self.params
        size = hi - lo
        self.telemetry.observe_level(level)
        if parent_size is not None and 2 * size > parent_size:
            # Hash failed to shrink this bucket: remix once, then give up
            # on bucketing and finish in a base case.
            stalled += 1
            if stalled == 1:
                rounds = params.rounds_per_hash
                depth = (depth // rounds + 1) * rounds
        if size < params.base_case_cutoff or stalled >= 2 or level >= DEPTH_LIMIT:
            self._leaf(lo, hi, live_primary)
            return

        src = self.buffers.primary if live_primary else self.buffers.scratch
        dst = self.buffers.scratch if live_primary else self.buffers.primary
        window = src.view(lo, hi)
        rng = np.random.Generator(np.random.Philox(key=mix64_pair(params.seed, path)))
        heavy = sample_and_bucket(window, self.adapter, params, depth, rng)
        n_buckets = params.light_buckets + len(heavy)

        ids = assign_bucket_ids(window, heavy, self.adapter, params, depth, self.pool)
        self.telemetry.bucket_assignments += size
        counts = _counts_from_ids(ids, params, n_buckets, self.pool)
        self.telemetry.add_matrix_cells(level, counts.size)
        prefix, offsets = column_major_exclusive_scan(counts)
        assert int(offsets[-1]) == size  # every record counted exactly once
        _distribute_ids(src, dst, lo, ids, prefix, params, n_buckets, self.pool)
        del ids
        if dst is self.buffers.scratch:
            self.telemetry.scratch_moves += size
            heavy_start = int(offsets[params.light_buckets])
            if heavy_start < size:
                self._copy_back(lo + heavy_start, hi)

        small: list[tuple[int, int]] = []
        big: list[tuple[int, int, int]] = []
        for bucket in range(params.light_buckets):
            b_lo, b_hi = int(offsets[bucket]), int(offsets[bucket + 1])
            if b_hi == b_lo:
                continue
            if b_hi - b_lo < params.base_case_cutoff:
                small.append((lo + b_lo, lo + b_hi))
            else:
                big.append((bucket, lo + b_lo, lo + b_hi))
        dst_primary = not live_primary
        self._leaf_batch(small, level + 1, dst_primary)
        for bucket, c_lo, c_hi in big:
            self.node(c_lo, c_hi, level + 1, depth + 1, dst_primary,
                      mix64_pair(path, bucket + 1), size, stalled)

    def _leaf(self, lo: int, hi: int, live_primary: bool) -> None:
        buf = self.buffers.primary if live_primary else self.buffers.scratch
        window = buf.view(lo, hi)
        if self.mode == "lt":
            base_case_lt(window, self.adapter)
        else:
            base_case_eq(window, self.adapter)
        if not live_primary:
            self._copy_back(lo, hi)

    def _leaf_batch(self, spans: list[tuple[int, int]], level: int,
                    live_primary: bool) -> None:
        if not spans:
            return
        self.telemetry.observe_level(level, len(spans))

        def work(chunk: list[tuple[int, int]]) -> None:
            for lo, hi in chunk:
                self._leaf(lo, hi, live_primary)

        if self.pool.workers == 1 or len(spans) == 1:
            work(spans)
            return
        step = -(-len(spans) // (self.pool.workers * 4))
        self.pool.map(work, [spans[i : i + step] for i in range(0, len(spans), step)])

    def _copy_back(self, lo: int, hi: int) -> None:
        primary, scratch = self.buffers.primary, self.buffers.scratch
        primary.keys[lo:hi] = scratch.keys[lo:hi]
        if primary.values is not None:
            primary.values[lo:hi] = scratch.values[lo:hi]


def local_refine(buffers: WorkBuffers, plan: BucketPlan, adapter: KeyAdapter,
                 mode: str, params: TuningParams, *, depth: int = 0,
                 workers: int | None = None,
                 telemetry: Telemetry | None = None) -> None:
    """Refine the light buckets of an already-distributed node.

    ``buffers.live_in_primary`` names the side holding the distributed
    records. Heavy buckets are final and skipped; each light bucket is
    recursively semisorted with buffer roles swapped, and results ending
    up in scratch are copied back to primary.
    """
    telemetry = telemetry if telemetry is not None else Telemetry()
    with WorkerPool(workers) as pool:
        run = _SortRun(buffers, adapter, mode, params, pool, telemetry)
        offsets = plan.offsets
        live_primary = buffers.live_in_primary
        if not live_primary:
            heavy_start = int(offsets[params.light_buckets])
            if heavy_start < offsets[-1]:
                run._copy_back(heavy_start, int(offsets[-1]))
        small, big = [], []
        for bucket in range(params.light_buckets):
            b_lo, b_hi = int(offsets[bucket]), int(offsets[bucket + 1])
            if b_hi == b_lo:
                continue
            target = small if b_hi - b_lo < params.base_case_cutoff else big
            target.append((bucket, b_lo, b_hi))
        run._leaf_batch([(lo, hi) for _, lo, hi in small], 1, live_primary)
        for bucket, lo, hi in big:
            run.node(lo, hi, 1, depth + 1, live_primary,
                     mix64_pair(params.seed, bucket + 1), int(offsets[-1]), 0)


def semisort(data: RecordArray, adapter: KeyAdapter, mode: str = "eq",
             params: TuningParams | None = None, *, workers: int | None = None,
             telemetry: Telemetry | None = None) -> RecordArray:
    """Reorder ``data`` in place so equal-keyed records become contiguous.

    Stable (equal keys keep their input order) and deterministic: a fixed
    ``params.seed`` yields byte-identical output at any worker count.
    ``mode`` selects the base case: ``"eq"`` needs only key equality,
    ``"lt"`` uses the adapter's stable comparison sort.

    Allocates exactly one scratch array of the input's size; the result
    is returned in the input array.
    """
    if mode not in ("eq", "lt"):
        raise ConfigurationError(f"mode must be 'eq' or 'lt', got {mode!r}")
    if mode == "lt" and not adapter.has_lt:
        raise ContractError("mode 'lt' requires an adapter with a less-than test")
    n = len(data)
    if params is None:
        params = TuningParams.for_input(n)
    elif params.input_size != n:
        raise ConfigurationError(
            f"params derived for n={params.input_size} used on n={n}"
        )
    telemetry = telemetry if telemetry is not None else Telemetry()
    scratch = data.empty_like()
    telemetry.scratch_allocations += 1
    buffers = WorkBuffers(primary=data, scratch=scratch)
    with WorkerPool(workers) as pool:
        run = _SortRun(buffers, adapter, mode, params, pool, telemetry)
        run.node(0, n, level=1, depth=0, live_primary=True,
                 path=0, parent_size=None, stalled=0)
    return data
