"""Sequential brute-force validators and reference folds.

Ground truth for every property test and the CLI ``--verify`` flag.
Nothing here shares code with the parallel paths: permutation is checked
by comparing sorted serialized records, contiguity by a run scan, and
stability by per-key subsequence comparison. Semisort has no canonical
output, so the validator checks the three defining properties instead of
producing one.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .adapters import KeyAdapter
from .aggregate import KeyedResult, ReduceSpec
from .records import RecordArray


@dataclass
class ValidationReport:
    is_permutation: bool
    is_contiguous: bool
    is_stable: bool
    first_violation: tuple[int, str] | None = None

    @property
    def valid(self) -> bool:
        return self.is_permutation and self.is_contiguous and self.is_stable

    def __bool__(self) -> bool:
        return self.valid


def _row_sort_order(rows: np.ndarray) -> np.ndarray:
    """A consistent total order over whole records.

    Any fixed order works for multiset comparison; byte columns are packed
    into 64-bit words so the lexsort touches few keys.
    """
    n, width = rows.shape
    if width == 0:
        return np.arange(n)
    if width % 8:
        pad = np.zeros((n, 8 - width % 8), dtype=np.uint8)
        rows = np.hstack([rows, pad])
    words = np.ascontiguousarray(rows).view(np.uint64).reshape(n, -1)
    return np.lexsort(tuple(words[:, c] for c in range(words.shape[1] - 1, -1, -1)))


def _concat(a: RecordArray, b: RecordArray) -> RecordArray:
    keys = np.concatenate([a.keys, b.keys])
    values = None
    if a.values is not None:
        values = np.concatenate([a.values, b.values])
    return RecordArray(keys, values, a.key_kind, a.arena)


def validate_semisort(input_data: RecordArray, output_data: RecordArray,
                      adapter: KeyAdapter) -> ValidationReport:
    """Check that output is a stable semisort of input.

    Permutation: multisets of serialized records match. Contiguity: each
    key forms exactly one maximal run in the output. Stability: for every
    key, the output subsequence of its records equals the input
    subsequence. O(n log n), sequential.
    """
    n = len(input_data)
    if len(output_data) != n:
        return ValidationReport(False, False, False, (0, "length mismatch"))
    if n == 0:
        return ValidationReport(True, True, True)

    rows_in = input_data.row_bytes()
    rows_out = output_data.row_bytes()

    # Shared group labels across both arrays so keys align by content.
    combined = _concat(input_data, output_data)
    gid_all, _ = adapter.group_block(combined, 0, 2 * n)
    gid_in, gid_out = gid_all[:n], gid_all[n:]

    run_start = np.empty(n, dtype=bool)
    run_start[0] = True
    run_start[1:] = gid_out[1:] != gid_out[:-1]
    starts = np.flatnonzero(run_start)
    run_keys = gid_out[starts]
    reappear = np.flatnonzero(np.bincount(run_keys) > 1)
    is_contiguous = len(reappear) == 0

    sub_in = np.argsort(gid_in, kind="stable")
    sub_out = np.argsort(gid_out, kind="stable")
    stable_diff = np.flatnonzero(
        (rows_in[sub_in] != rows_out[sub_out]).any(axis=1)
    )
    is_stable = len(stable_diff) == 0

    if is_stable:
        # Equal per-key subsequences imply equal record multisets.
        is_permutation, perm_diff = True, np.zeros(0, dtype=np.int64)
    else:
        order_in = _row_sort_order(rows_in)
        order_out = _row_sort_order(rows_out)
        perm_diff = np.flatnonzero(
            (rows_in[order_in] != rows_out[order_out]).any(axis=1)
        )
        is_permutation = len(perm_diff) == 0

    violation = None
    if not is_contiguous:
        seen: set[int] = set()
        for s in starts.tolist():
            g = int(gid_out[s])
            if g in seen:
                violation = (s, "key reappears after its run ended")
                break
            seen.add(g)
    elif not is_stable:
        at = int(sub_out[stable_diff[0]])
        violation = (at, "equal-key records out of input order")
    elif not is_permutation:
        at = int(order_out[perm_diff[0]])
        violation = (at, "record multiset differs from input")
    return ValidationReport(is_permutation, is_contiguous, is_stable, violation)


def oracle_collect_reduce(input_data: RecordArray, adapter: KeyAdapter,
                          spec: ReduceSpec) -> KeyedResult:
    """Sequential per-key left fold in input order; keys by first occurrence."""
    acc: dict = {}
    n = len(input_data)
    keys = adapter.canonical_list(input_data, np.arange(n))
    for i in range(n):
        key = keys[i]
        mapped = spec.map_record(key, input_data.value_at(i))
        if key in acc:
            acc[key] = spec.combine(acc[key], mapped)
        else:
            acc[key] = spec.combine(spec.identity, mapped)
    return KeyedResult(list(acc.items()))


def _aggregate_equal(a, b) -> bool:
    if isinstance(a, np.ndarray) or isinstance(b, np.ndarray):
        return np.array_equal(a, b)
    return a == b


def multiset_equal(a: KeyedResult, b: KeyedResult, adapter: KeyAdapter) -> bool:
    """Order-insensitive equality of (key, aggregate) pair sets."""
    if len(a) != len(b):
        return False
    left = dict(a.pairs)
    if len(left) != len(a):
        return False  # duplicate keys violate the KeyedResult invariant
    for key, value in b.pairs:
        if key not in left or not _aggregate_equal(left[key], value):
            return False
    return True
