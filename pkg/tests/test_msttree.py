import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import codes
from fxmst.ingest import PanelError
from fxmst.msttree import (
    DistanceMatrix,
    SpanningTree,
    build_mst,
    degree_distribution,
    distance_matrix,
    distribution_from_degrees,
    distribution_to_csv,
    export_tree,
    parse_edge_csv,
)
from oracles import all_spanning_trees, brute_force_mst_weight, prim_edges, random_distance_matrix


def labelled(d, labels=None):
    d = np.asarray(d, dtype=float)
    return DistanceMatrix(tuple(labels or codes(len(d))), d)


@pytest.mark.parametrize("c, d", [(1.0, 0.0), (-1.0, 1.0), (0.0, np.sqrt(0.5))])
def test_distance_formula(c, d):
    dm = distance_matrix(np.array([[1.0, c], [c, 1.0]]), ["AAA", "BBB"])
    assert dm.entries[0, 1] == pytest.approx(d, abs=1e-15)
    assert dm.entries[0, 0] == 0.0


def test_distance_rejects_out_of_range():
    with pytest.raises(PanelError):
        distance_matrix(np.array([[1.0, 1.1], [1.1, 1.0]]), ["AAA", "BBB"])


def test_three_node_unique_mst():
    d = [[0, 0.1, 0.3], [0.1, 0, 0.2], [0.3, 0.2, 0]]
    tree = build_mst(labelled(d, ["AAA", "BBB", "CCC"]))
    assert tree.edge_set() == {("AAA", "BBB"), ("BBB", "CCC")}
    assert tree.degree == {"AAA": 1, "BBB": 2, "CCC": 1}


def test_two_nodes():
    tree = build_mst(labelled([[0, 0.4], [0.4, 0]], ["EUR", "USD"]))
    assert tree.edges == (("EUR", "USD", 0.4),)
    assert tree.degree == {"EUR": 1, "USD": 1}


def test_edges_are_ordered_pairs():
    d = random_distance_matrix(np.random.default_rng(0), 8)
    tree = build_mst(labelled(d, ["ZAR", "AUD", "USD", "EUR", "JPY", "CHF", "BRL", "GBP"]))
    assert all(a < b for a, b, _ in tree.edges)
    assert list(tree.edges) == sorted(tree.edges)


def test_cayley_count():
    assert sum(1 for _ in all_spanning_trees(6)) == 6**4 == 1296


def test_mst_matches_exhaustive_enumeration():
    rng = np.random.default_rng(1)
    for _ in range(30):
        d = random_distance_matrix(rng, 6)
        assert build_mst(labelled(d)).total_weight == pytest.approx(brute_force_mst_weight(d), abs=1e-12)


def test_kruskal_equals_prim_from_every_start():
    rng = np.random.default_rng(2)
    for n in range(2, 13):
        d = random_distance_matrix(rng, n)
        labels = codes(n)
        kruskal = {(labels.index(a), labels.index(b)) for a, b, _ in build_mst(labelled(d, labels)).edges}
        for start in range(n):
            assert prim_edges(d, start) == kruskal


def test_tie_break_is_reproducible():
    d = np.ones((4, 4)) - np.eye(4)
    tree = build_mst(labelled(d, ["DDD", "CCC", "BBB", "AAA"]))
    # all distances equal: lexicographic order picks the star around AAA
    assert tree.edge_set() == {("AAA", "BBB"), ("AAA", "CCC"), ("AAA", "DDD")}


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 25), st.integers(0, 2**32 - 1))
def test_tree_invariants(n, seed):
    d = random_distance_matrix(np.random.default_rng(seed), n)
    tree = build_mst(labelled(d))
    assert len(tree.edges) == n - 1
    deg = tree.degree
    assert sum(deg.values()) == 2 * (n - 1)
    assert min(deg.values()) >= 1
    # connected: walk from one node reaches all
    adj = {v: set() for v in tree.nodes}
    for a, b, _ in tree.edges:
        adj[a].add(b)
        adj[b].add(a)
    seen, stack = set(), [tree.nodes[0]]
    while stack:
        v = stack.pop()
        if v not in seen:
            seen.add(v)
            stack.extend(adj[v] - seen)
    assert seen == set(tree.nodes)


@settings(max_examples=30, deadline=None)
@given(st.integers(3, 15), st.integers(0, 2**32 - 1))
def test_relabeling_invariance(n, seed):
    rng = np.random.default_rng(seed)
    d = random_distance_matrix(rng, n)
    perm = rng.permutation(n)
    labels = codes(n)
    a = build_mst(labelled(d, labels))
    b = build_mst(labelled(d[np.ix_(perm, perm)], [labels[i] for i in perm]))
    assert a.total_weight == pytest.approx(b.total_weight, abs=1e-12)
    assert a.edge_set() == b.edge_set()


@settings(max_examples=30, deadline=None)
@given(st.integers(3, 20), st.integers(0, 2**32 - 1))
def test_monotone_transform_invariance(n, seed):
    d = random_distance_matrix(np.random.default_rng(seed), n)
    base = build_mst(labelled(d)).edge_set()
    assert build_mst(labelled(d**2)).edge_set() == base
    assert build_mst(labelled(np.sqrt(d))).edge_set() == base
    assert build_mst(labelled(np.exp(d))).edge_set() == base


def path_tree():
    return SpanningTree(
        ("AAA", "BBB", "CCC", "DDD"), (("AAA", "BBB", 0.1), ("BBB", "CCC", 0.2), ("CCC", "DDD", 0.3))
    )


def test_degree_distribution_path():
    dist = degree_distribution(path_tree())
    assert dist.counts == {1: 2, 2: 2}
    assert dist.cumulative == {1: 1.0, 2: 0.5}
    assert dist.k_max == 2


@pytest.mark.parametrize("n", [3, 5, 10])
def test_degree_distribution_star(n):
    labels = codes(n)
    tree = SpanningTree(tuple(labels), tuple((labels[0], b, 0.5) for b in labels[1:]))
    dist = degree_distribution(tree)
    assert dist.counts[1] == n - 1
    assert dist.counts[n - 1] == 1
    assert dist.cumulative[n - 1] == pytest.approx(1 / n)


def test_degree_distribution_defined_on_empty_bins():
    dist = distribution_from_degrees([1, 1, 1, 1, 4])
    assert dist.counts == {1: 4, 2: 0, 3: 0, 4: 1}
    assert dist.cumulative == {1: 1.0, 2: 0.2, 3: 0.2, 4: 0.2}
    ks, f = dist.occupied()
    assert list(ks) == [1, 4]


@settings(max_examples=50, deadline=None)
@given(st.integers(2, 40), st.integers(0, 2**32 - 1))
def test_handshake_and_cumulative_shape(n, seed):
    tree = build_mst(labelled(random_distance_matrix(np.random.default_rng(seed), n)))
    dist = degree_distribution(tree)
    assert sum(k * c for k, c in dist.counts.items()) == 2 * (n - 1)
    assert sum(dist.counts.values()) == n
    f = [dist.cumulative[k] for k in range(1, dist.k_max + 1)]
    assert f[0] == 1.0
    assert all(b <= a for a, b in zip(f, f[1:]))
    assert f[-1] >= 1 / n
    assert dist.mean_degree == pytest.approx(2 * (n - 1) / n)


def test_export_dot_two_nodes():
    tree = SpanningTree(("EUR", "USD"), (("EUR", "USD", 0.123456789),))
    text = export_tree(tree, "dot", name="GBP").decode()
    assert text.startswith('graph "GBP" {')
    edge_lines = [line for line in text.splitlines() if "--" in line]
    assert edge_lines == ['  "EUR" -- "USD" [label="0.123457"];']


def test_export_csv_round_trip_is_byte_identical():
    d = random_distance_matrix(np.random.default_rng(4), 9)
    tree = build_mst(labelled(d))
    data = export_tree(tree, "edge-csv")
    assert data.decode().splitlines()[0] == "a,b,distance"
    again = parse_edge_csv(data)
    assert export_tree(again, "edge-csv") == data
    assert again.edge_set() == tree.edge_set()


def test_export_59_nodes_has_58_edge_lines():
    d = random_distance_matrix(np.random.default_rng(5), 59)
    tree = build_mst(labelled(d))
    dot = export_tree(tree, "dot").decode()
    assert sum("--" in line for line in dot.splitlines()) == 58
    assert len(export_tree(tree, "edge-csv").decode().splitlines()) == 59


def test_export_unknown_format():
    with pytest.raises(ValueError, match="unknown tree format"):
        export_tree(path_tree(), "gml")


def test_distribution_csv():
    text = distribution_to_csv(degree_distribution(path_tree())).decode()
    assert text.splitlines() == ["K,N_prime,F", "1,2,1", "2,2,0.5"]
