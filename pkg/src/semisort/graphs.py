"""Directed-graph transposition from CSR via integer semisort.

Transposing a CSR graph is exactly semisorting the edge list by target:
materialize (target, source) pairs, run the stable integer semisort, and
rebuild offsets by a run-length scan. Stability keeps each transposed
adjacency list in ascending source order, because CSR enumeration emits
sources in ascending order.

File formats: text edge lists (``u v`` per line, ``#`` comments) and a
binary CSR dump (n and m as 64-bit little-endian, then n+1 64-bit
offsets, then m 32-bit targets).
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .adapters import UIntKeyAdapter
from .core import Telemetry, semisort
from .errors import InputFormatError
from .params import TuningParams
from .records import RecordArray


@dataclass
class CsrGraph:
    num_vertices: int
    num_edges: int
    offsets: np.ndarray  # (n+1,) uint64, nondecreasing
    targets: np.ndarray  # (m,) uint32

    def validate(self) -> None:
        n, m = self.num_vertices, self.num_edges
        if len(self.offsets) != n + 1:
            raise InputFormatError("offsets must have n+1 entries")
        if self.offsets[0] != 0 or self.offsets[n] != m:
            raise InputFormatError("offsets must start at 0 and end at m")
        if len(self.targets) != m:
            raise InputFormatError("targets length must equal m")
        if n and np.any(np.diff(self.offsets.astype(np.int64)) < 0):
            raise InputFormatError("offsets must be nondecreasing")
        if m and int(self.targets.max()) >= n:
            raise InputFormatError("target vertex id out of range")

    def adjacency(self, v: int) -> np.ndarray:
        return self.targets[int(self.offsets[v]) : int(self.offsets[v + 1])]

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, CsrGraph)
            and self.num_vertices == other.num_vertices
            and self.num_edges == other.num_edges
            and np.array_equal(self.offsets, other.offsets)
            and np.array_equal(self.targets, other.targets)
        )


def from_edges(n: int, sources: np.ndarray, targets: np.ndarray) -> CsrGraph:
    """Build a CSR graph; per-vertex adjacency keeps edge input order."""
    sources = np.asarray(sources, dtype=np.uint32)
    targets = np.asarray(targets, dtype=np.uint32)
    m = len(sources)
    if m and (int(sources.max()) >= n or int(targets.max()) >= n):
        raise InputFormatError("edge endpoint out of range")
    counts = np.bincount(sources, minlength=n) if m else np.zeros(n, dtype=np.int64)
    offsets = np.zeros(n + 1, dtype=np.uint64)
    np.cumsum(counts, out=offsets[1:])
    order = np.argsort(sources, kind="stable")
    graph = CsrGraph(n, m, offsets, targets[order])
    graph.validate()
    return graph


def transpose(graph: CsrGraph, params: TuningParams | None = None, *,
              workers: int | None = None,
              telemetry: Telemetry | None = None) -> CsrGraph:
    """Reverse every edge: returns the graph with (v, u) for each (u, v)."""
    graph.validate()
    n, m = graph.num_vertices, graph.num_edges
    degrees = np.diff(graph.offsets.astype(np.int64))
    sources = np.repeat(np.arange(n, dtype=np.uint32), degrees)
    pairs = RecordArray(graph.targets.astype(np.uint32), sources)
    if params is None:
        params = TuningParams.for_input(m)
    semisort(pairs, UIntKeyAdapter(identity=True), "eq", params,
             workers=workers, telemetry=telemetry)

    counts = np.bincount(graph.targets, minlength=n) if m else np.zeros(n, np.int64)
    offsets = np.zeros(n + 1, dtype=np.uint64)
    np.cumsum(counts, out=offsets[1:])
    new_targets = np.empty(m, dtype=np.uint32)
    if m:
        keys = pairs.keys
        run_start = np.empty(m, dtype=bool)
        run_start[0] = True
        run_start[1:] = keys[1:] != keys[:-1]
        starts = np.flatnonzero(run_start)
        sizes = np.diff(np.append(starts, m))
        base = offsets[keys[starts]].astype(np.int64)
        within = np.arange(m, dtype=np.int64) - np.repeat(starts, sizes)
        new_targets[np.repeat(base, sizes) + within] = pairs.values
    return CsrGraph(n, m, offsets, new_targets)


# -- file formats -------------------------------------------------------------


def read_edge_list(path) -> CsrGraph:
    sources: list[int] = []
    targets: list[int] = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            text = line.strip()
            if not text or text.startswith("#"):
                continue
            parts = text.split()
            if len(parts) != 2:
                raise InputFormatError(f"{path}:{lineno}: expected 'u v'")
            try:
                sources.append(int(parts[0]))
                targets.append(int(parts[1]))
            except ValueError as exc:
                raise InputFormatError(f"{path}:{lineno}: non-integer vertex") from exc
    if sources:
        n = max(max(sources), max(targets)) + 1
    else:
        n = 0
    return from_edges(n, np.asarray(sources, np.uint32), np.asarray(targets, np.uint32))


def write_csr(path, graph: CsrGraph) -> None:
    graph.validate()
    with open(path, "wb") as fh:
        fh.write(struct.pack("<QQ", graph.num_vertices, graph.num_edges))
        fh.write(graph.offsets.astype("<u8").tobytes())
        fh.write(graph.targets.astype("<u4").tobytes())


def read_csr(path) -> CsrGraph:
    with open(path, "rb") as fh:
        header = fh.read(16)
        if len(header) != 16:
            raise InputFormatError(f"{path}: truncated CSR header")
        n, m = struct.unpack("<QQ", header)
        offsets = np.frombuffer(fh.read(8 * (n + 1)), dtype="<u8")
        targets = np.frombuffer(fh.read(4 * m), dtype="<u4")
    if len(offsets) != n + 1 or len(targets) != m:
        raise InputFormatError(f"{path}: truncated CSR payload")
    graph = CsrGraph(n, m, offsets.astype(np.uint64), targets.astype(np.uint32))
    graph.validate()
    return graph


def read_graph(path) -> CsrGraph:
    """Sniff binary CSR by extension (.csr), else parse as text edge list."""
    if str(path).endswith(".csr"):
        return read_csr(path)
    return read_edge_list(path)
