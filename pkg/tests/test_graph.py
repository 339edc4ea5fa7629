import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import make_pairs
from hsmc.corr import prune_semantic
from hsmc.errors import CapacityExceeded
from hsmc.graph import (
    ConsistencyGraph,
    build_class_subgraphs,
    build_consistency_graph,
    degree,
    induced_subgraph,
    pair_distance,
    random_graph,
    read_edge_list,
    write_edge_list,
)
from hsmc.synth import SceneSpec, generate_scene


def reference_adjacency(c, threshold):
    """Independent double loop over pairs."""
    src = c.source.points[c.pairs[:, 0]]
    dst = c.target.points[c.pairs[:, 1]]
    n = len(c)
    adj = np.zeros((n, n), dtype=bool)
    for i in range(n):
        for j in range(n):
            if i != j:
                a = math.dist(src[i], src[j])
                b = math.dist(dst[i], dst[j])
                adj[i, j] = abs(a - b) <= threshold
    return adj


def test_pair_distance_rigid_is_zero():
    c = make_pairs([[0, 0, 0], [1, 2, 3]], [[5, 5, 5], [6, 7, 8]])
    assert pair_distance(c, 0, 1) == 0.0


def test_pair_distance_example():
    c = make_pairs([[0, 0, 0], [3, 4, 0]], [[0, 0, 0], [0, 0, 7]])
    assert pair_distance(c, 0, 1) == 2.0


def test_boundary_is_inclusive():
    # |5 - 5.5| = 0.5 = 2 * 0.25 exactly in binary floating point
    c = make_pairs([[0, 0, 0], [3, 4, 0]], [[0, 0, 0], [0, 0, 5.5]])
    assert build_consistency_graph(c, 0.25).adjacent(0, 1)
    assert not build_consistency_graph(c, 0.2499).adjacent(0, 1)


def test_noise_free_inliers_give_complete_graph():
    c, _ = generate_scene(SceneSpec(num_inliers=30, num_outliers=0, noise_sigma=0.0, rng_seed=2))
    g = build_consistency_graph(c, 0.1)
    assert g.edge_count() == 30 * 29 // 2


@pytest.mark.parametrize("seed", range(5))
def test_adjacency_matches_reference(seed):
    c, _ = generate_scene(SceneSpec(num_inliers=10, num_outliers=40, rng_seed=seed))
    g = build_consistency_graph(c, 0.1)
    np.testing.assert_array_equal(g.adjacency_matrix(), reference_adjacency(c, 0.2))


def test_threshold_factor_is_respected():
    c, _ = generate_scene(SceneSpec(num_inliers=10, num_outliers=40, rng_seed=9))
    g = build_consistency_graph(c, 0.1, threshold_factor=1.0)
    np.testing.assert_array_equal(g.adjacency_matrix(), reference_adjacency(c, 0.1))


def test_vertex_cap():
    c, _ = generate_scene(SceneSpec(num_inliers=10, num_outliers=10, rng_seed=0))
    with pytest.raises(CapacityExceeded):
        build_consistency_graph(c, 0.1, vertex_cap=19)


def test_subgraphs_single_class():
    c, _ = generate_scene(SceneSpec(num_inliers=15, num_outliers=30, num_classes=1, rng_seed=1))
    c = prune_semantic(c)
    (sub,) = build_class_subgraphs(c, 0.1)
    full = build_consistency_graph(c, 0.1)
    assert sub.rows == full.rows
    np.testing.assert_array_equal(sub.vertex_map, full.vertex_map)


def test_subgraphs_are_class_restricted():
    c, _ = generate_scene(SceneSpec(num_inliers=30, num_outliers=60, num_classes=3, rng_seed=4))
    c = prune_semantic(c)
    labels = c.pair_labels()
    full = build_consistency_graph(c, 0.1).adjacency_matrix()
    subs = build_class_subgraphs(c, 0.1)
    assert [g.class_label for g in subs] == sorted(set(labels.tolist()))
    union = np.zeros_like(full)
    for g in subs:
        assert np.all(labels[g.vertex_map] == g.class_label)
        vm = g.vertex_map
        union[np.ix_(vm, vm)] |= g.adjacency_matrix()
    expected = full & (labels[:, None] == labels[None, :])
    np.testing.assert_array_equal(union, expected)


def test_singleton_class():
    c = make_pairs([[0, 0, 0], [1, 0, 0], [2, 0, 0]], [[0, 0, 0], [1, 0, 0], [2, 0, 0]], [1, 1, 2], [1, 1, 2])
    subs = build_class_subgraphs(c, 0.1)
    assert len(subs[1]) == 1 and subs[1].edge_count() == 0


def test_degree():
    assert degree(ConsistencyGraph.from_edges(3, []), 0) == 0
    k5 = ConsistencyGraph.from_adjacency(~np.eye(5, dtype=bool))
    assert all(degree(k5, v) == 4 for v in range(5))


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(0, 40), st.floats(0, 1))
def test_degree_matches_row_scan(seed, n, p):
    g = random_graph(np.random.default_rng(seed), n, p)
    adj = g.adjacency_matrix()
    assert np.array_equal(adj, adj.T) and not adj.diagonal().any()
    for v in range(n):
        assert degree(g, v) == int(adj[v].sum()) == len(g.neighbors(v))


def test_induced_subgraph_full_and_empty():
    g = random_graph(np.random.default_rng(0), 12, 0.5)
    assert induced_subgraph(g, range(12)).rows == g.rows
    assert len(induced_subgraph(g, [])) == 0


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 30), st.data())
def test_induced_subgraph_matches_filter(seed, n, data):
    g = random_graph(np.random.default_rng(seed), n, 0.5)
    vs = data.draw(st.lists(st.integers(0, n - 1), unique=True))
    h = induced_subgraph(g, vs)
    adj = g.adjacency_matrix()
    for a, b in itertools.product(range(len(vs)), repeat=2):
        assert h.adjacent(a, b) == bool(adj[vs[a], vs[b]])
    assert list(h.vertex_map) == vs


def test_edge_list_round_trip(tmp_path):
    g = random_graph(np.random.default_rng(5), 15, 0.4)
    write_edge_list(g, tmp_path / "g.txt")
    assert read_edge_list(tmp_path / "g.txt", 15).rows == g.rows


def test_from_adjacency_rejects_asymmetric():
    m = np.zeros((2, 2), dtype=bool)
    m[0, 1] = True
    with pytest.raises(ValueError):
        ConsistencyGraph.from_adjacency(m)
