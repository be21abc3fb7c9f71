import numpy as np
import pytest

from stdcformer.graph import (
    AdjacencyGraph,
    grid_graph,
    laplacian_embedding,
    load_edge_list,
    ring_graph,
    write_edge_list,
)


def sym_normalized_laplacian(graph):
    adj = graph.adjacency_matrix()
    deg = adj.sum(axis=1)
    inv = 1.0 / np.sqrt(deg)
    return np.eye(graph.n) - inv[:, None] * adj * inv[None, :]


def test_path_two_nodes_hand_eigenvector():
    # 2x2 decomposition by hand: eigenvalues 0 and 2; the nontrivial
    # eigenvector is [1, -1]/sqrt(2) after the sign rule
    graph = AdjacencyGraph(n=2, edges=frozenset({(0, 1)}))
    emb = laplacian_embedding(graph, 1)
    assert emb[:, 0] == pytest.approx([1 / np.sqrt(2), -1 / np.sqrt(2)])


def test_ring_four_nodes_eigenvalue_one_eigenvector():
    graph = ring_graph(4)
    emb = laplacian_embedding(graph, 1)
    col = emb[:, 0]
    lap = sym_normalized_laplacian(graph)
    # brute-force check: L v = 1 * v, unit norm, sign rule applied
    assert lap @ col == pytest.approx(col, abs=1e-10)
    assert np.linalg.norm(col) == pytest.approx(1.0)
    first = col[np.abs(col) > 1e-8][0]
    assert first > 0


def test_columns_unit_norm_and_orthogonal_to_constant_on_regular_graph():
    graph = ring_graph(7)
    emb = laplacian_embedding(graph, 4)
    ones = np.ones(7)
    for k in range(4):
        assert np.linalg.norm(emb[:, k]) == pytest.approx(1.0, abs=1e-8)
        assert abs(emb[:, k] @ ones) < 1e-8


def test_columns_are_laplacian_eigenvectors_ascending():
    graph = grid_graph(6)
    lap = sym_normalized_laplacian(graph)
    eigvals = np.sort(np.linalg.eigvalsh(lap))
    emb = laplacian_embedding(graph, 4)
    rayleigh = [emb[:, k] @ lap @ emb[:, k] for k in range(4)]
    assert rayleigh == pytest.approx(eigvals[1:5].tolist(), abs=1e-8)
    assert all(a <= b + 1e-8 for a, b in zip(rayleigh, rayleigh[1:]))


def test_repeated_calls_bit_identical():
    graph = grid_graph(9)
    a = laplacian_embedding(graph, 5)
    b = laplacian_embedding(graph, 5)
    assert np.array_equal(a, b)


def test_permutation_equivariance_up_to_column_sign():
    # an irregular connected graph with a non-degenerate spectrum
    edges = frozenset({(0, 1), (1, 2), (2, 3), (3, 4), (1, 3)})
    graph = AdjacencyGraph(n=5, edges=edges)
    lap = sym_normalized_laplacian(graph)
    gaps = np.diff(np.sort(np.linalg.eigvalsh(lap)))
    assert (gaps > 1e-6).all()

    rng = np.random.default_rng(0)
    perm = rng.permutation(5)
    permuted_edges = frozenset({(int(perm[a]), int(perm[b])) for a, b in edges})
    permuted = AdjacencyGraph(n=5, edges=permuted_edges)

    emb = laplacian_embedding(graph, 3)
    emb_p = laplacian_embedding(permuted, 3)
    for k in range(3):
        expected = np.empty(5)
        expected[perm] = emb[:, k]
        close = np.allclose(emb_p[:, k], expected, atol=1e-8)
        flipped = np.allclose(emb_p[:, k], -expected, atol=1e-8)
        assert close or flipped


def test_disconnected_graph_rejected_listing_components():
    graph = AdjacencyGraph(n=4, edges=frozenset({(0, 1), (2, 3)}))
    with pytest.raises(ValueError, match=r"\[0, 1\].*\[2, 3\]"):
        laplacian_embedding(graph, 1)


def test_dimension_bound_rejected():
    with pytest.raises(ValueError, match="exceeds"):
        laplacian_embedding(ring_graph(4), 4)


def test_self_loop_and_bad_index_rejected():
    with pytest.raises(ValueError, match="self-loop"):
        AdjacencyGraph(n=3, edges=frozenset({(1, 1)}))
    with pytest.raises(ValueError, match="outside"):
        AdjacencyGraph(n=3, edges=frozenset({(0, 5)}))


def test_grid_graph_connected_for_odd_sizes():
    for n in (2, 3, 5, 7, 10, 12):
        assert len(grid_graph(n).components()) == 1


def test_edge_list_round_trip(tmp_path):
    graph = grid_graph(6)
    ids = [f"R{i}" for i in range(6)]
    path = tmp_path / "adj.txt"
    write_edge_list(path, graph, ids)
    back = load_edge_list(path, ids)
    assert back.edges == graph.edges


def test_edge_list_unknown_region(tmp_path):
    path = tmp_path / "adj.txt"
    path.write_text("A,B\n")
    with pytest.raises(ValueError, match="'B'"):
        load_edge_list(path, ["A"])


def test_embedding_csv_dump(tmp_path):
    from stdcformer.graph import write_embedding_csv

    graph = ring_graph(5)
    emb = laplacian_embedding(graph, 2)
    path = tmp_path / "emb.csv"
    write_embedding_csv(path, emb, [f"R{i}" for i in range(5)])
    lines = path.read_text().splitlines()
    assert lines[0] == "region_id,lap_0,lap_1"
    assert len(lines) == 6
    assert float(lines[1].split(",")[1]) == emb[0, 0]
