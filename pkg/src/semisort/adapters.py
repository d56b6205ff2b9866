"""Key adapters: extraction, equality, ordering and hashing per key kind.

An adapter bundles everything the sorting machinery needs to know about a
key type: an equality test (the ground truth), an optional strict total
order consistent with it, and a deterministic 64-bit hash where
``eq(a, b)`` implies equal hashes. Integer adapters offer an identity-hash
mode; byte-view adapters hash and compare key *content*, so two views with
different offsets but equal bytes are one key.

Each semantic operation has a vectorized form over a window of a
:class:`~semisort.records.RecordArray` (what the algorithms call) and a
scalar form over a *canonical* key — a plain int for u32/u64, an
``(lo, hi)`` tuple for u128, a ``bytes`` object for byte views.
"""

from __future__ import annotations

import numpy as np

from .errors import ContractError
from .hashing import BytePrefixHasher, U64_MASK, hash_bytes, mix64, mix64_array
from .records import RecordArray


class KeyAdapter:
    """Base adapter; concrete subclasses implement the per-kind semantics."""

    key_kind: str
    identity_mode: bool = False
    has_lt: bool = True

    # -- hashing -------------------------------------------------------------

    def hash_block(self, data: RecordArray, lo: int, hi: int) -> np.ndarray:
        raise NotImplementedError

    def hash_scalar(self, key) -> int:
        raise NotImplementedError

    # -- canonical (hashable) keys --------------------------------------------

    def canonical(self, data: RecordArray, i: int):
        raise NotImplementedError

    def canonical_list(self, data: RecordArray, idx) -> list:
        raise NotImplementedError

    # -- grouping by equality --------------------------------------------------

    def group_block(self, data: RecordArray, lo: int, hi: int):
        """Label records by key equality.

        Returns ``(gid, first_pos)``: ``gid[i]`` is the group of record
        ``lo+i`` with groups numbered 0..G-1 in order of first occurrence,
        and ``first_pos[g]`` the window-relative index where group ``g``
        first appears.
        """
        raise NotImplementedError

    # -- ordering ---------------------------------------------------------------

    def sort_block(self, data: RecordArray, lo: int, hi: int) -> np.ndarray:
        """Stable permutation ordering the window by the less-than test."""
        raise ContractError(f"{type(self).__name__} has no less-than test")

    # -- membership against a fixed key -----------------------------------------

    def match_rows(self, data: RecordArray, idx: np.ndarray, key) -> np.ndarray:
        """Boolean mask: which of data[idx] equal the canonical ``key``."""
        raise NotImplementedError

    def pack_keys(self, keys: list):
        """Kind-specific container of canonical keys for bulk matching."""
        raise NotImplementedError

    def match_packed(self, data: RecordArray, idx: np.ndarray, packed, slot: np.ndarray) -> np.ndarray:
        """Boolean mask: data[idx[i]] equals packed key number slot[i]."""
        raise NotImplementedError


def _group_by_sorted(order: np.ndarray, sort_key_equal) -> tuple[np.ndarray, np.ndarray]:
    """Shared tail for sort-based grouping.

    ``order`` is a stable content sort; ``sort_key_equal(a, b)`` compares
    adjacent sorted positions vectorized. Groups are relabeled by first
    occurrence so labels are independent of the sort's key order.
    """
    m = len(order)
    gid = np.empty(m, dtype=np.int64)
    boundary = np.empty(m, dtype=bool)
    boundary[0] = True
    boundary[1:] = ~sort_key_equal(order[:-1], order[1:])
    labels_sorted = np.cumsum(boundary) - 1
    gid[order] = labels_sorted
    starts = np.flatnonzero(boundary)
    first_pos_by_sorted = order[starts]  # stable sort => first member has min index
    relabel = np.argsort(first_pos_by_sorted, kind="stable")
    inverse = np.empty(len(relabel), dtype=np.int64)
    inverse[relabel] = np.arange(len(relabel))
    return inverse[gid], first_pos_by_sorted[relabel]


class UIntKeyAdapter(KeyAdapter):
    """Adapter for plain 32/64-bit unsigned integer keys."""

    key_kind = "uint"

    def __init__(self, identity: bool = False, with_lt: bool = True):
        self.identity_mode = identity
        self.has_lt = with_lt

    def hash_block(self, data, lo, hi):
        keys = data.keys[lo:hi].astype(np.uint64, copy=False)
        if self.identity_mode:
            return keys
        return mix64_array(keys)

    def hash_scalar(self, key) -> int:
        return key & U64_MASK if self.identity_mode else mix64(int(key))

    def canonical(self, data, i):
        return int(data.keys[i])

    def canonical_list(self, data, idx):
        return data.keys[idx].tolist()

    def group_block(self, data, lo, hi):
        keys = data.keys[lo:hi]
        order = np.argsort(keys, kind="stable")
        return _group_by_sorted(order, lambda a, b: keys[a] == keys[b])

    def sort_block(self, data, lo, hi):
        if not self.has_lt:
            return super().sort_block(data, lo, hi)
        return np.argsort(data.keys[lo:hi], kind="stable")

    def match_rows(self, data, idx, key):
        return data.keys[idx] == data.keys.dtype.type(key)

    def pack_keys(self, keys):
        return np.asarray(keys, dtype=np.uint64)

    def match_packed(self, data, idx, packed, slot):
        return data.keys[idx].astype(np.uint64, copy=False) == packed[slot]


class UInt128KeyAdapter(KeyAdapter):
    """Adapter for 128-bit integer keys stored as (lo, hi) word pairs."""

    key_kind = "u128"

    def __init__(self, identity: bool = False, with_lt: bool = True):
        self.identity_mode = identity
        self.has_lt = with_lt

    def hash_block(self, data, lo, hi):
        words = data.keys[lo:hi]
        if self.identity_mode:
            return words[:, 0].copy()
        return mix64_array(mix64_array(words[:, 1]) ^ words[:, 0])

    def hash_scalar(self, key) -> int:
        lo, hi = key
        if self.identity_mode:
            return lo & U64_MASK
        return mix64(mix64(hi) ^ lo)

    def canonical(self, data, i):
        return (int(data.keys[i, 0]), int(data.keys[i, 1]))

    def canonical_list(self, data, idx):
        rows = data.keys[idx]
        return list(zip(rows[:, 0].tolist(), rows[:, 1].tolist()))

    def group_block(self, data, lo, hi):
        words = data.keys[lo:hi]
        order = np.lexsort((words[:, 0], words[:, 1]))
        eq = lambda a, b: (words[a, 0] == words[b, 0]) & (words[a, 1] == words[b, 1])
        return _group_by_sorted(order, eq)

    def sort_block(self, data, lo, hi):
        if not self.has_lt:
            return super().sort_block(data, lo, hi)
        words = data.keys[lo:hi]
        return np.lexsort((words[:, 0], words[:, 1]))

    def match_rows(self, data, idx, key):
        rows = data.keys[idx]
        return (rows[:, 0] == np.uint64(key[0])) & (rows[:, 1] == np.uint64(key[1]))

    def pack_keys(self, keys):
        return np.asarray(keys, dtype=np.uint64).reshape(-1, 2)

    def match_packed(self, data, idx, packed, slot):
        rows = data.keys[idx]
        want = packed[slot]
        return (rows[:, 0] == want[:, 0]) & (rows[:, 1] == want[:, 1])


class BytesKeyAdapter(KeyAdapter):
    """Adapter for composite byte-view keys over a shared arena.

    Equality and ordering compare the referenced bytes; the hash is a
    polynomial over the content (offsets never matter).
    """

    key_kind = "bytes"

    def __init__(self, arena: np.ndarray):
        self.arena = np.asarray(arena, dtype=np.uint8)
        self._hasher = BytePrefixHasher(self.arena)

    def hash_block(self, data, lo, hi):
        views = data.keys[lo:hi]
        return self._hasher.hash_views(views[:, 0], views[:, 1])

    def hash_scalar(self, key) -> int:
        return hash_bytes(key)

    def canonical(self, data, i):
        off, ln = int(data.keys[i, 0]), int(data.keys[i, 1])
        return self.arena[off : off + ln].tobytes()

    def canonical_list(self, data, idx):
        rows = data.keys[idx]
        buf = self.arena
        return [
            buf[o : o + l].tobytes()
            for o, l in zip(rows[:, 0].tolist(), rows[:, 1].tolist())
        ]

    def group_block(self, data, lo, hi):
        # Content grouping via an encounter-order dict of bytes; base cases
        # and oracles only, so the Python loop stays off the hot path.
        views = data.keys[lo:hi]
        gid = np.empty(len(views), dtype=np.int64)
        first_pos: list[int] = []
        seen: dict[bytes, int] = {}
        buf = self.arena
        for i, (o, l) in enumerate(zip(views[:, 0].tolist(), views[:, 1].tolist())):
            word = buf[o : o + l].tobytes()
            g = seen.get(word)
            if g is None:
                g = len(seen)
                seen[word] = g
                first_pos.append(i)
            gid[i] = g
        return gid, np.asarray(first_pos, dtype=np.int64)

    def sort_block(self, data, lo, hi):
        content = self.canonical_list(data, slice(lo, hi))
        order = sorted(range(len(content)), key=content.__getitem__)
        return np.asarray(order, dtype=np.int64)

    def match_rows(self, data, idx, key):
        rows = data.keys[idx]
        ok = rows[:, 1] == np.uint64(len(key))
        hits = np.flatnonzero(ok)
        if len(hits):
            want = np.frombuffer(key, dtype=np.uint8)
            offs = rows[hits, 0].astype(np.int64)
            span = np.arange(len(key), dtype=np.int64)
            same = (self.arena[offs[:, None] + span[None, :]] == want).all(axis=1)
            ok[hits] = same
        return ok

    def pack_keys(self, keys):
        return list(keys)

    def match_packed(self, data, idx, packed, slot):
        out = np.zeros(len(idx), dtype=bool)
        for s in np.unique(slot):
            sel = slot == s
            out[sel] = self.match_rows(data, idx[sel], packed[int(s)])
        return out


def adapter_for(data: RecordArray, *, identity: bool = False) -> KeyAdapter:
    """Construct the natural adapter for a record array's key kind."""
    if data.key_kind in ("u32", "u64"):
        return UIntKeyAdapter(identity=identity)
    if data.key_kind == "u128":
        return UInt128KeyAdapter(identity=identity)
    return BytesKeyAdapter(data.arena)
