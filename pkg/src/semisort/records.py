"""Fixed-width record arrays and their binary dump format.

A :class:`RecordArray` is a contiguous sequence of (key, value) records.
Keys come in four kinds:

``u32``, ``u64``
    plain unsigned integers, stored as a 1-D array;
``u128``
    128-bit integers stored as an ``(n, 2)`` uint64 array, column 0 the
    low word, column 1 the high word;
``bytes``
    composite keys stored as ``(offset, length)`` views into a shared,
    caller-owned uint8 arena (column 0 offset, column 1 length).

Values are optional and may be any fixed-width numpy layout; the
generators use value width equal to key width. Slicing produces numpy
views, never copies.
"""

from __future__ import annotations

import struct

import numpy as np

from .errors import InputFormatError

KEY_KINDS = ("u32", "u64", "u128", "bytes")
_KEY_WIDTH = {"u32": 32, "u64": 64, "u128": 128, "bytes": 128}

DUMP_MAGIC = b"SSR1"


class RecordArray:
    __slots__ = ("keys", "values", "arena", "key_kind")

    def __init__(self, keys, values=None, key_kind=None, arena=None):
        keys = np.asarray(keys)
        if key_kind is None:
            key_kind = self._infer_kind(keys)
        if key_kind not in KEY_KINDS:
            raise ValueError(f"unknown key kind {key_kind!r}")
        if key_kind == "u32":
            keys = keys.astype(np.uint32, copy=False)
        elif key_kind == "u64":
            keys = keys.astype(np.uint64, copy=False)
        else:
            keys = keys.astype(np.uint64, copy=False)
            if keys.ndim != 2 or keys.shape[1] != 2:
                raise ValueError(f"{key_kind} keys must have shape (n, 2)")
        if key_kind == "bytes":
            if arena is None:
                raise ValueError("bytes keys require an arena")
            arena = np.asarray(arena, dtype=np.uint8)
        if values is not None:
            values = np.asarray(values)
            if len(values) != len(keys):
                raise ValueError("values length must match keys length")
        self.keys = keys
        self.values = values
        self.arena = arena
        self.key_kind = key_kind

    @staticmethod
    def _infer_kind(keys: np.ndarray) -> str:
        if keys.ndim == 2:
            return "u128"
        if keys.dtype == np.uint32:
            return "u32"
        return "u64"

    # -- shape & views ------------------------------------------------------

    def __len__(self) -> int:
        return len(self.keys)

    @property
    def key_width(self) -> int:
        return _KEY_WIDTH[self.key_kind]

    def view(self, lo: int, hi: int) -> "RecordArray":
        """Contiguous subrange as numpy views (no copy)."""
        values = None if self.values is None else self.values[lo:hi]
        return RecordArray(self.keys[lo:hi], values, self.key_kind, self.arena)

    def copy(self) -> "RecordArray":
        values = None if self.values is None else self.values.copy()
        return RecordArray(self.keys.copy(), values, self.key_kind, self.arena)

    def empty_like(self, n: int | None = None) -> "RecordArray":
        if n is None:
            n = len(self)
        shape = (n,) + self.keys.shape[1:]
        keys = np.empty(shape, dtype=self.keys.dtype)
        values = None
        if self.values is not None:
            values = np.empty((n,) + self.values.shape[1:], dtype=self.values.dtype)
        return RecordArray(keys, values, self.key_kind, self.arena)

    def gather(self, idx) -> "RecordArray":
        values = None if self.values is None else self.values[idx]
        return RecordArray(self.keys[idx], values, self.key_kind, self.arena)

    def value_at(self, i: int):
        """Record i's value as a plain Python scalar/tuple (None if no values)."""
        if self.values is None:
            return None
        row = self.values[i]
        return tuple(int(x) for x in row) if row.ndim else int(row)

    # -- whole-record byte layout (oracles, equality) -----------------------

    def row_bytes(self) -> np.ndarray:
        """(n, row_size) uint8 matrix of key bytes followed by value bytes."""
        n = len(self)
        parts = [self._as_byte_matrix(self.keys, n)]
        if self.values is not None:
            parts.append(self._as_byte_matrix(self.values, n))
        return parts[0] if len(parts) == 1 else np.hstack(parts)

    @staticmethod
    def _as_byte_matrix(arr: np.ndarray, n: int) -> np.ndarray:
        le = arr.astype(arr.dtype.newbyteorder("<"), copy=False)
        width = arr.dtype.itemsize
        for dim in arr.shape[1:]:
            width *= dim
        return np.ascontiguousarray(le).view(np.uint8).reshape(n, width)

    def same_bytes(self, other: "RecordArray") -> bool:
        if len(self) != len(other) or self.key_kind != other.key_kind:
            return False
        return bool(np.array_equal(self.row_bytes(), other.row_bytes()))


def copy_rows(dst: RecordArray, dst_idx, src: RecordArray, src_idx) -> None:
    """Scatter records src[src_idx] -> dst[dst_idx]; index ranges must be disjoint across concurrent callers."""
    dst.keys[dst_idx] = src.keys[src_idx]
    if src.values is not None:
        dst.values[dst_idx] = src.values[src_idx]


def permute_in_place(data: RecordArray, perm: np.ndarray) -> None:
    """Reorder ``data`` so row i becomes old row perm[i]."""
    data.keys[:] = data.keys[perm]
    if data.values is not None:
        data.values[:] = data.values[perm]


# -- binary record dump -----------------------------------------------------
# 16-byte header: magic (4), key_width u16, value_width u16, n u64; then
# packed little-endian records, key bytes first then value bytes.


def write_records(path, data: RecordArray) -> None:
    if data.key_kind == "bytes":
        raise InputFormatError("byte-view records cannot be dumped (arena-backed)")
    n = len(data)
    key_mat = data._as_byte_matrix(data.keys, n)
    value_width = 0
    mats = [key_mat]
    if data.values is not None:
        val_mat = data._as_byte_matrix(data.values, n)
        value_width = val_mat.shape[1] * 8
        mats.append(val_mat)
    header = DUMP_MAGIC + struct.pack("<HHQ", data.key_width, value_width, n)
    packed = mats[0] if len(mats) == 1 else np.hstack(mats)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(packed.tobytes())


def read_records(path) -> RecordArray:
    with open(path, "rb") as fh:
        header = fh.read(16)
        if len(header) != 16 or header[:4] != DUMP_MAGIC:
            raise InputFormatError(f"{path}: not a record dump")
        key_width, value_width, n = struct.unpack("<HHQ", header[4:])
        payload = fh.read()
    row = (key_width + value_width) // 8
    if key_width not in (32, 64, 128) or len(payload) != n * row:
        raise InputFormatError(f"{path}: corrupt record dump header")
    mat = np.frombuffer(payload, dtype=np.uint8).reshape(n, row) if n else np.zeros((0, row), np.uint8)
    kbytes = key_width // 8
    if key_width == 32:
        keys = mat[:, :kbytes].copy().view("<u4").reshape(n)
        kind = "u32"
    elif key_width == 64:
        keys = mat[:, :kbytes].copy().view("<u8").reshape(n)
        kind = "u64"
    else:
        keys = mat[:, :kbytes].copy().view("<u8").reshape(n, 2)
        kind = "u128"
    values = None
    if value_width:
        vmat = mat[:, kbytes:].copy()
        if value_width == 32:
            values = vmat.view("<u4").reshape(n)
        elif value_width == 64:
            values = vmat.view("<u8").reshape(n)
        else:
            values = vmat.view("<u8").reshape(n, value_width // 64)
    return RecordArray(keys, values, kind)
