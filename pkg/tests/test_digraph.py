import numpy as np
import pytest

from ftpushsum.digraph import (
    DiGraph,
    from_edge_list_text,
    is_strongly_connected,
    neighbor_sets,
    random_strongly_connected,
    to_edge_list_text,
)

from oracles import all_digraphs, closure_connected

RING3 = DiGraph(3, frozenset({(1, 0), (2, 1), (0, 2)}))


def test_ring_is_strongly_connected():
    assert is_strongly_connected(RING3)


def test_single_edge_pair_is_not_strongly_connected():
    assert not is_strongly_connected(DiGraph(2, frozenset({(1, 0)})))


def test_generated_five_node_graph_is_strongly_connected():
    g = random_strongly_connected(5, 0.3, seed=7)
    assert is_strongly_connected(g)


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_connectivity_matches_transitive_closure_exhaustively(n):
    for edges in all_digraphs(n):
        g = DiGraph(n, edges)
        assert is_strongly_connected(g) == closure_connected(n, edges), edges


def test_generator_always_strongly_connected():
    for seed in range(100):
        n = 1 + seed % 12
        g = random_strongly_connected(n, (seed % 7) / 10.0, seed=seed)
        assert g.n == n
        assert is_strongly_connected(g)


def test_generator_deterministic_per_seed():
    a = random_strongly_connected(8, 0.4, seed=123)
    b = random_strongly_connected(8, 0.4, seed=123)
    assert a.edges == b.edges


def test_generator_single_node():
    g = random_strongly_connected(1, 0.9, seed=0)
    assert g.n == 1 and g.edges == frozenset()


def test_generator_zero_probability_gives_plain_cycle():
    g = random_strongly_connected(3, 0.0, seed=1)
    assert len(g.edges) == 3
    nbrs = neighbor_sets(g)
    assert nbrs.out_degree == (1, 1, 1)


def test_generator_rejects_empty_graph():
    with pytest.raises(ValueError):
        random_strongly_connected(0)


def test_generator_has_at_least_cycle_edges():
    g = random_strongly_connected(5, 0.3, seed=7)
    assert len(g.edges) >= 5


def test_validation_rejects_self_loops_and_out_of_range():
    with pytest.raises(ValueError):
        DiGraph(2, frozenset({(0, 0)}))
    with pytest.raises(ValueError):
        DiGraph(2, frozenset({(2, 0)}))
    with pytest.raises(ValueError):
        DiGraph(0, frozenset())


def test_neighbor_sets_ring_out_degrees():
    assert neighbor_sets(RING3).out_degree == (1, 1, 1)


def test_neighbor_sets_star_center():
    g = DiGraph(4, frozenset({(1, 0), (2, 0), (3, 0)}))
    nbrs = neighbor_sets(g)
    assert nbrs.out_degree[0] == 3
    assert nbrs.in_neighbors[1] == frozenset({0})


def test_neighbor_duality_exhaustive_on_generated_graph():
    g = random_strongly_connected(5, 0.3, seed=7)
    nbrs = neighbor_sets(g)
    for i in range(g.n):
        for j in range(g.n):
            assert (j in nbrs.out_neighbors[i]) == (i in nbrs.in_neighbors[j])


def test_edge_count_identities():
    for seed in range(20):
        g = random_strongly_connected(2 + seed % 9, 0.35, seed=seed)
        nbrs = neighbor_sets(g)
        assert sum(nbrs.out_degree) == len(g.edges)
        assert sum(len(s) for s in nbrs.in_neighbors) == len(g.edges)


def test_edge_list_round_trip():
    g = random_strongly_connected(6, 0.3, seed=11)
    assert from_edge_list_text(to_edge_list_text(g)).edges == g.edges


def test_edge_list_format():
    text = to_edge_list_text(RING3)
    lines = text.strip().splitlines()
    assert lines[0] == "3"
    assert set(lines[1:]) == {"0 2", "1 0", "2 1"}  # "j i" means i sends to j


def test_edge_list_parse_errors():
    with pytest.raises(ValueError):
        from_edge_list_text("")
    with pytest.raises(ValueError):
        from_edge_list_text("x\n0 1\n")
    with pytest.raises(ValueError):
        from_edge_list_text("2\n0 1 2\n")
