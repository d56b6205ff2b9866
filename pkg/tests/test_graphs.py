import numpy as np
import pytest

from semisort.errors import InputFormatError
from semisort.graphs import (
    CsrGraph,
    from_edges,
    read_csr,
    read_edge_list,
    read_graph,
    transpose,
    write_csr,
)


def canonical_random_graph(rng, n, m):
    """Random CSR in canonical form: adjacency lists ascending."""
    src = rng.integers(0, n, m)
    dst = rng.integers(0, n, m)
    order = np.lexsort((dst, src))
    return from_edges(n, src[order], dst[order])


def bucket_transpose_oracle(graph):
    buckets = [[] for _ in range(graph.num_vertices)]
    for v in range(graph.num_vertices):
        for t in graph.adjacency(v):
            buckets[int(t)].append(v)
    return buckets


def test_symmetric_two_cycle_is_self_transpose():
    graph = from_edges(2, [0, 1], [1, 0])
    assert transpose(graph) == graph


def test_star_reverses_to_single_edges():
    k = 9
    graph = from_edges(k + 1, [0] * k, list(range(1, k + 1)))
    transposed = transpose(graph)
    assert transposed.adjacency(0).tolist() == []
    for leaf in range(1, k + 1):
        assert transposed.adjacency(leaf).tolist() == [0]


def test_random_graph_matches_bucket_oracle():
    rng = np.random.default_rng(21)
    graph = canonical_random_graph(rng, 10**3, 10**4)
    transposed = transpose(graph)
    oracle = bucket_transpose_oracle(graph)
    for v in range(graph.num_vertices):
        assert transposed.adjacency(v).tolist() == oracle[v]


def test_involution_on_canonical_graphs():
    rng = np.random.default_rng(22)
    for _ in range(5):
        graph = canonical_random_graph(rng, 200, 3000)
        assert transpose(transpose(graph)) == graph


def test_double_transpose_canonicalizes_arbitrary_graphs():
    rng = np.random.default_rng(23)
    src = rng.integers(0, 100, 2000)
    dst = rng.integers(0, 100, 2000)
    graph = from_edges(100, src, dst)  # input order kept, not sorted
    once = transpose(graph)
    assert transpose(transpose(once)) == once


def test_degree_conservation():
    rng = np.random.default_rng(24)
    graph = canonical_random_graph(rng, 500, 8000)
    transposed = transpose(graph)
    in_degrees = np.bincount(graph.targets, minlength=graph.num_vertices)
    out_degrees = np.diff(transposed.offsets.astype(np.int64))
    assert np.array_equal(in_degrees, out_degrees)


def test_empty_and_isolated_vertices():
    graph = from_edges(4, [], [])
    transposed = transpose(graph)
    assert transposed.num_edges == 0
    assert transposed.offsets.tolist() == [0, 0, 0, 0, 0]


def test_multi_edges_preserved():
    graph = from_edges(3, [0, 0, 1], [1, 1, 1])
    transposed = transpose(graph)
    assert transposed.adjacency(1).tolist() == [0, 0, 1]


def test_edge_list_parsing(tmp_path):
    path = tmp_path / "g.el"
    path.write_text("# a comment\n0 1\n\n2 0\n1 2\n")
    graph = read_edge_list(path)
    assert graph.num_vertices == 3 and graph.num_edges == 3
    assert graph.adjacency(0).tolist() == [1]
    bad = tmp_path / "bad.el"
    bad.write_text("0 1 2\n")
    with pytest.raises(InputFormatError):
        read_edge_list(bad)
    nonint = tmp_path / "nonint.el"
    nonint.write_text("a b\n")
    with pytest.raises(InputFormatError):
        read_edge_list(nonint)


def test_csr_round_trip(tmp_path):
    rng = np.random.default_rng(25)
    graph = canonical_random_graph(rng, 64, 500)
    path = tmp_path / "g.csr"
    write_csr(path, graph)
    assert read_csr(path) == graph
    assert read_graph(path) == graph


def test_malformed_csr_rejected(tmp_path):
    with pytest.raises(InputFormatError):
        CsrGraph(2, 1, np.array([0, 2, 1], np.uint64),
                 np.array([0], np.uint32)).validate()
    with pytest.raises(InputFormatError):
        CsrGraph(2, 1, np.array([0, 0, 1], np.uint64),
                 np.array([5], np.uint32)).validate()
    with pytest.raises(InputFormatError):
        CsrGraph(2, 2, np.array([0, 1, 1], np.uint64),
                 np.array([0], np.uint32)).validate()
    short = tmp_path / "short.csr"
    short.write_bytes(b"\x01")
    with pytest.raises(InputFormatError):
        read_csr(short)


def test_from_edges_rejects_out_of_range():
    with pytest.raises(InputFormatError):
        from_edges(2, [0], [5])
