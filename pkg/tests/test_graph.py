import io
import random
from pathlib import Path

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import line_dedup_counts, union_find_components
from pdpsearch.graph import (
    Graph,
    GraphFormatError,
    Population,
    gnp_random_graph,
    load_edge_list,
    load_partition,
    random_weighted_graph,
    read_edge_list,
    rewire_vertex,
    sparsify_by_weight,
    targeted_components,
    write_id_map,
    write_partition,
)

DATA = Path(__file__).parent / "data"


def test_load_simple():
    g = load_edge_list("0 1\n1 2")
    assert g.n == 3
    assert g.edges == ((0, 1), (1, 2))


def test_weighted_duplicates_merge_by_sum():
    g = load_edge_list("0 1 2\n0 1 1", weighted=True)
    assert g.edges == ((0, 1),)
    assert g.weight(0, 1) == 3


def test_reversed_duplicate_merges():
    g = load_edge_list("0 1 2\n1 0 5", weighted=True)
    assert g.weight(1, 0) == 7


def test_unweighted_duplicates_collapse():
    g = load_edge_list("0 1\n1 0\n0 1\n")
    assert g.edges == ((0, 1),)


def test_comments_blank_lines_and_labels():
    g = load_edge_list("# header\n\n10 30\n30 20\n")
    assert g.labels == ("10", "20", "30")
    assert g.n == 3
    assert g.has_edge(0, 2) and g.has_edge(1, 2) and not g.has_edge(0, 1)


def test_string_labels_sorted_lexicographically():
    g = load_edge_list("bob alice\ncarol bob\n")
    assert g.labels == ("alice", "bob", "carol")


def test_unweighted_load_ignores_weight_column():
    g = load_edge_list("0 1 4\n")
    assert not g.weighted


@pytest.mark.parametrize(
    "text, line",
    [("0 1\n0\n", 2), ("0 1\n1 2 3 4\n", 2), ("0 1 x\n", 1), ("0 1 0\n", 1)],
)
def test_malformed_lines_report_line_number(text, line):
    with pytest.raises(GraphFormatError) as exc:
        load_edge_list(text, weighted=True)
    assert exc.value.line_no == line


def test_self_loop_rejected():
    with pytest.raises(GraphFormatError) as exc:
        load_edge_list("0 1\n2 2\n")
    assert exc.value.line_no == 2


def test_random_fixture_matches_line_dedup_oracle():
    text = (DATA / "random20.txt").read_text()
    assert len(text.splitlines()) == 20
    g = read_edge_list(DATA / "random20.txt")
    assert (g.n, len(g.edges)) == line_dedup_counts(text)
    # frozen from an awk recount of the same file
    assert (g.n, len(g.edges)) == (12, 18)


def test_id_map_round_trip(tmp_path):
    g = load_edge_list("a b\nb c\n")
    write_id_map(g, tmp_path / "ids.txt")
    assert (tmp_path / "ids.txt").read_text() == "0 a\n1 b\n2 c\n"
    buf = io.StringIO()
    g.write_edge_list(buf)
    assert load_edge_list(buf.getvalue()) == g


def test_sparsify_examples():
    g = Graph(3, [(0, 1), (1, 2)], {(0, 1): 1, (1, 2): 2})
    assert sparsify_by_weight(g, 2).edges == ((1, 2),)
    assert sparsify_by_weight(g, 1) == g
    assert sparsify_by_weight(g, 2).n == 3


def test_sparsify_random_matches_filter_count():
    g = random_weighted_graph(30, 0.3, 4, seed=5)
    expected = sum(1 for e in g.edges if g.weight(*e) >= 2)
    assert len(sparsify_by_weight(g, 2).edges) == expected


def test_sparsify_rejects_unweighted_and_bad_threshold():
    with pytest.raises(ValueError):
        sparsify_by_weight(Graph(2, [(0, 1)]), 2)
    with pytest.raises(ValueError):
        sparsify_by_weight(Graph(2, [(0, 1)], {(0, 1): 1}), 0)


def test_rewire_examples():
    path = Graph(3, [(0, 1), (1, 2)])
    assert rewire_vertex(path, 1, []).edges == ()
    g = gnp_random_graph(8, 0.5, seed=9)
    for v in range(g.n):
        assert rewire_vertex(g, v, g.neighbors(v)).canonical_bytes() == g.canonical_bytes()


def test_rewire_changes_only_the_rewired_slot():
    g = gnp_random_graph(8, 0.5, seed=9)
    for v in range(g.n):
        new = [u for u in range(g.n) if u != v and (u * 3 + v) % 2 == 0]
        h = rewire_vertex(g, v, new)
        for u in range(g.n):
            for w in range(g.n):
                if u == w:
                    continue
                if v in (u, w):
                    other = w if u == v else u
                    assert h.has_edge(u, w) == (other in new)
                else:
                    assert h.has_edge(u, w) == g.has_edge(u, w)


def test_rewire_errors():
    g = Graph(3, [(0, 1)])
    with pytest.raises(ValueError):
        rewire_vertex(g, 3, [])
    with pytest.raises(ValueError):
        rewire_vertex(g, 0, [0])
    with pytest.raises(ValueError):
        rewire_vertex(g, 0, [7])


def test_targeted_components_examples():
    g = Graph(3, [(0, 1)])
    assert targeted_components(g, Population(3, [])) == []
    assert targeted_components(g, Population(3, [0, 1])) == [[0, 1]]


def test_targeted_components_union_find_oracle():
    g = gnp_random_graph(20, 0.15, seed=11)
    targeted = random.Random(11).sample(range(20), 8)
    got = targeted_components(g, Population(20, targeted))
    assert got == union_find_components(20, g.edges, targeted)


def test_population_counts_distinct_queries():
    pop = Population(4, [1, 2])
    assert pop.query(1) and not pop.query(0) and pop.query(1)
    assert pop.oracle_queries == 2
    assert pop.is_targeted(2) and pop.oracle_queries == 2
    assert pop.targeted | pop.protected == frozenset(range(4))
    assert not pop.targeted & pop.protected
    assert pop.fresh().oracle_queries == 0


def test_partition_round_trip():
    g = load_edge_list("x y\ny z\n")
    buf = io.StringIO()
    write_partition(g, [0, 2], buf)
    assert buf.getvalue() == "x\nz\n"
    assert load_partition(buf.getvalue(), g).targeted == frozenset({0, 2})
    with pytest.raises(GraphFormatError):
        load_partition("w\n", g)


@st.composite
def graphs(draw, max_n=9):
    n = draw(st.integers(1, max_n))
    pairs = [(u, v) for u in range(n) for v in range(u + 1, n)]
    edges = draw(st.lists(st.sampled_from(pairs), unique=True)) if pairs else []
    return Graph(n, edges)


@given(graphs())
def test_degree_sum_is_twice_edge_count(g):
    assert sum(g.degree(v) for v in range(g.n)) == 2 * len(g.edges)


@given(graphs(), st.data())
def test_rewire_identity_is_bit_identical(g, data):
    v = data.draw(st.integers(0, g.n - 1))
    assert rewire_vertex(g, v, g.neighbors(v)).canonical_bytes() == g.canonical_bytes()


@settings(max_examples=60)
@given(graphs(max_n=8), st.data())
def test_protected_rewiring_keeps_targeted_subgraph(g, data):
    targeted = data.draw(st.sets(st.integers(0, g.n - 1)))
    protected = sorted(set(range(g.n)) - targeted)
    if not protected:
        return
    v = data.draw(st.sampled_from(protected))
    new = data.draw(st.sets(st.integers(0, g.n - 1).filter(lambda u: u != v)))
    h = rewire_vertex(g, v, new)
    assert h.induced_edges(targeted) == g.induced_edges(targeted)


def test_adjacency_matrix_matches_neighbors():
    g = gnp_random_graph(15, 0.3, seed=4)
    a = g.adjacency_matrix().toarray()
    for v in range(g.n):
        assert [int(u) for u in a[v].nonzero()[0]] == list(g.neighbors(v))
