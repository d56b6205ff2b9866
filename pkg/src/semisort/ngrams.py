"""N-gram extraction over cleaned text for semisort grouping.

Cleaning keeps ASCII letters (lowercased) and treats every other byte —
including non-ASCII — as a separator. The cleaned words are packed into
an arena joined by single spaces, so the first n-1 words of any window
form one contiguous byte view: that view is the record key, the last
word's view is the value. Key equality compares raw bytes; hashes are
content hashes, so equal word sequences group together wherever they
occur.
"""

from __future__ import annotations

import numpy as np

from .adapters import BytesKeyAdapter
from .errors import ConfigurationError
from .records import RecordArray

_SPACE = 0x20


def clean_words(text: bytes | str) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Lowercase/strip text into an arena of space-joined words.

    Returns (arena, word_offsets, word_lengths).
    """
    if isinstance(text, str):
        text = text.encode("utf-8", errors="replace")
    raw = np.frombuffer(text, dtype=np.uint8)
    lower = raw.copy()
    caps = (lower >= ord("A")) & (lower <= ord("Z"))
    lower[caps] += 32
    alpha = (lower >= ord("a")) & (lower <= ord("z"))
    if not alpha.any():
        empty = np.zeros(0, dtype=np.uint64)
        return np.zeros(0, dtype=np.uint8), empty, empty

    boundary = np.empty(len(alpha), dtype=bool)
    boundary[0] = alpha[0]
    boundary[1:] = alpha[1:] & ~alpha[:-1]
    word_starts = np.flatnonzero(boundary)
    ends = np.empty(len(alpha), dtype=bool)
    ends[-1] = alpha[-1]
    ends[:-1] = alpha[:-1] & ~alpha[1:]
    word_ends = np.flatnonzero(ends) + 1
    lengths = (word_ends - word_starts).astype(np.int64)

    dst_starts = np.zeros(len(lengths), dtype=np.int64)
    np.cumsum(lengths[:-1] + 1, out=dst_starts[1:])
    arena = np.full(int(dst_starts[-1] + lengths[-1]), _SPACE, dtype=np.uint8)
    total = int(lengths.sum())
    within = np.arange(total, dtype=np.int64) - np.repeat(
        np.cumsum(lengths) - lengths, lengths
    )
    arena[np.repeat(dst_starts, lengths) + within] = lower[
        np.repeat(word_starts, lengths) + within
    ]
    return arena, dst_starts.astype(np.uint64), lengths.astype(np.uint64)


def build_ngrams(text: bytes | str, gram_size: int) -> RecordArray:
    """Records over every window of ``gram_size`` consecutive words.

    The key is the first gram_size-1 words (one contiguous byte view),
    the value the last word's (offset, length) view. Empty text yields
    an empty record array backed by an empty arena.
    """
    if gram_size < 2:
        raise ConfigurationError("gram_size must be >= 2")
    arena, starts, lengths = clean_words(text)
    words = len(starts)
    count = max(0, words - gram_size + 1)
    keys = np.zeros((count, 2), dtype=np.uint64)
    values = np.zeros((count, 2), dtype=np.uint64)
    if count:
        head = gram_size - 1
        key_end = starts[head - 1 : head - 1 + count] + lengths[head - 1 : head - 1 + count]
        keys[:, 0] = starts[:count]
        keys[:, 1] = key_end - starts[:count]
        values[:, 0] = starts[head : head + count]
        values[:, 1] = lengths[head : head + count]
    return RecordArray(keys, values, "bytes", arena)


def ngram_adapter(records: RecordArray) -> BytesKeyAdapter:
    return BytesKeyAdapter(records.arena)


def decode_view(arena: np.ndarray, view) -> str:
    off, length = int(view[0]), int(view[1])
    return arena[off : off + length].tobytes().decode("latin-1")
