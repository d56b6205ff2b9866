"""64-bit avalanche mixing and byte-stream hashing for bucket assignment.

Every hash has a scalar (pure Python int) and a vectorized (numpy) form;
the two are kept in bit-for-bit lockstep and property tests assert it.
The scalar forms use masked Python integers so they never overflow, the
vector forms rely on numpy's wrapping unsigned arithmetic.
"""

from __future__ import annotations

import numpy as np

U64_MASK = 0xFFFF_FFFF_FFFF_FFFF
GOLDEN_GAMMA = 0x9E37_79B9_7F4A_7C15
_MIX_MULT_1 = 0xBF58_476D_1CE4_E5B9
_MIX_MULT_2 = 0x94D0_49BB_1331_11EB

# Odd multiplier for the byte-stream polynomial hash (the FNV-1a prime).
POLY_MULT = 0x0000_0100_0000_01B3
_POLY_INV = pow(POLY_MULT, -1, 1 << 64)

UINT64 = np.dtype(np.uint64)


def mix64(x: int) -> int:
    """Scalar splitmix64-style finalizer with full avalanche."""
    z = (x + GOLDEN_GAMMA) & U64_MASK
    z = ((z ^ (z >> 30)) * _MIX_MULT_1) & U64_MASK
    z = ((z ^ (z >> 27)) * _MIX_MULT_2) & U64_MASK
    return (z ^ (z >> 31)) & U64_MASK


def mix64_array(x: np.ndarray) -> np.ndarray:
    """Vectorized :func:`mix64` over a uint64 array."""
    z = x.astype(UINT64, copy=True)
    z += np.uint64(GOLDEN_GAMMA)
    z ^= z >> 30
    z *= np.uint64(_MIX_MULT_1)
    z ^= z >> 27
    z *= np.uint64(_MIX_MULT_2)
    z ^= z >> 31
    return z


def mix64_pair(a: int, b: int) -> int:
    """Mix two 64-bit words into one (order-sensitive)."""
    return mix64(a ^ mix64(b))


def mix64_pair_array(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    out = mix64_array(b)
    out ^= a.astype(UINT64, copy=False)
    return mix64_array(out)


def poly_bytes(data: bytes) -> int:
    """Scalar polynomial hash of a byte string (pre-mix stage)."""
    acc = 0
    for byte in data:
        acc = (acc * POLY_MULT + byte) & U64_MASK
    return acc


def hash_bytes(data: bytes) -> int:
    """Scalar content hash matching :meth:`BytePrefixHasher.hash_views`."""
    return mix64(poly_bytes(data) ^ mix64(len(data)))


def _wrapping_powers(base: int, count: int) -> np.ndarray:
    """[1, base, base^2, ...] with uint64 wraparound."""
    out = np.full(max(count, 1), base, dtype=UINT64)
    out[0] = 1
    return np.cumprod(out)


class BytePrefixHasher:
    """Constant-time content hashes for substrings of a fixed byte arena.

    Precomputes rolling prefix sums ``H[i+1] = H[i]*p + arena[i]`` so the
    polynomial hash of ``arena[off:off+length]`` equals ``H[off+length] -
    H[off]*p**length`` (mod 2^64) — identical to hashing the extracted
    bytes directly, so equal content hashes equal regardless of offset.
    The recurrence is vectorized by rescaling with the modular inverse of
    ``p``: ``H[i+1] = (sum_j arena[j]*p^-j for j<=i) * p^i``.
    """

    def __init__(self, arena: np.ndarray):
        if arena.dtype != np.uint8:
            raise TypeError("arena must be a uint8 array")
        self.arena = arena
        n = len(arena)
        self._ppow = _wrapping_powers(POLY_MULT, n + 1)
        scaled = arena.astype(UINT64) * _wrapping_powers(_POLY_INV, n)
        prefix = np.empty(n + 1, dtype=UINT64)
        prefix[0] = 0
        np.cumsum(scaled, out=prefix[1:])
        prefix[1:] *= self._ppow[:n]
        self._prefix = prefix

    def hash_views(self, offsets: np.ndarray, lengths: np.ndarray) -> np.ndarray:
        """Mixed content hash of each (offset, length) view, vectorized."""
        off = offsets.astype(np.int64, copy=False)
        ln = lengths.astype(np.int64, copy=False)
        raw = self._prefix[off + ln] - self._prefix[off] * self._ppow[ln]
        salt = mix64_array(ln.astype(UINT64))
        return mix64_array(raw ^ salt)
