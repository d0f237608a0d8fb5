import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ergmkit.network import (
    EdgeListParseError,
    Network,
    as_dyad,
    dyad_arrays,
    dyad_count,
    format_edgelist_text,
    linear_dyad_index,
    parse_edgelist_text,
)

from conftest import network_from_code


def test_dyad_count_values():
    assert dyad_count(10) == 45
    # the full space on 10 nodes really does exceed 3.5e13 networks
    assert 2 ** dyad_count(10) > 3.5e13
    assert dyad_count(1) == 0
    assert dyad_count(9) == 36
    with pytest.raises(ValueError):
        dyad_count(0)


def test_toggle_basics():
    net = Network(3)
    net.toggle(0, 1)
    assert net.edge_count == 1 and net.has_edge(0, 1) and net.has_edge(1, 0)

    complete = Network.from_edges(4, [(i, j) for i in range(4) for j in range(i + 1, 4)])
    assert complete.edge_count == 6
    complete.toggle(2, 3)
    assert complete.edge_count == 5 and not complete.has_edge(2, 3)


def test_toggle_validation():
    net = Network(4)
    with pytest.raises(ValueError):
        net.toggle(1, 1)
    with pytest.raises(IndexError):
        net.toggle(0, 4)
    with pytest.raises(IndexError):
        net.has_edge(-1, 2)


def test_density():
    complete5 = Network.from_edges(5, [(i, j) for i in range(5) for j in range(i + 1, 5)])
    assert complete5.density() == 1.0
    assert Network(6).density() == 0.0
    with pytest.raises(ValueError):
        Network(1).density()


def test_linear_dyad_index_round_trip():
    n = 7
    rows, cols = dyad_arrays(n)
    for d in range(dyad_count(n)):
        assert linear_dyad_index(int(rows[d]), int(cols[d]), n) == d
        assert linear_dyad_index(int(cols[d]), int(rows[d]), n) == d


@given(st.integers(2, 9), st.data())
@settings(max_examples=60, deadline=None)
def test_toggle_is_involution(n, data):
    code = data.draw(st.integers(0, 2 ** dyad_count(n) - 1))
    net = network_from_code(n, code)
    before = net.copy()
    d = data.draw(st.integers(0, dyad_count(n) - 1))
    rows, cols = dyad_arrays(n)
    i, j = int(rows[d]), int(cols[d])
    net.toggle(i, j)
    assert net != before or dyad_count(n) == 0
    net.toggle(i, j)
    assert net == before and net.edge_count == before.edge_count


@given(st.integers(2, 9), st.data())
@settings(max_examples=60, deadline=None)
def test_edge_count_cache_consistent(n, data):
    code = data.draw(st.integers(0, 2 ** dyad_count(n) - 1))
    net = network_from_code(n, code)
    assert net.edge_count == net.recount_edges() == bin(code).count("1")
    # degrees sum to twice the edge count
    assert net.degrees().sum() == 2 * net.edge_count


@given(st.integers(2, 9), st.data())
@settings(max_examples=40, deadline=None)
def test_edgelist_round_trip(n, data):
    code = data.draw(st.integers(0, 2 ** dyad_count(n) - 1))
    net = network_from_code(n, code)
    n2, arcs = parse_edgelist_text(format_edgelist_text(net))
    rebuilt = Network.from_edges(n2, arcs)
    assert rebuilt == net


def test_adjacency_and_neighbors():
    net = Network.from_edges(5, [(0, 1), (1, 2), (1, 4)])
    a = net.adjacency_matrix()
    assert np.array_equal(a, a.T) and a.diagonal().sum() == 0
    assert sorted(net.neighbors(1).tolist()) == [0, 2, 4]
    assert net.degree(1) == 3
    assert sorted(net.edges()) == [(0, 1), (1, 2), (1, 4)]


def test_from_adjacency_validation():
    with pytest.raises(ValueError):
        Network.from_adjacency(np.array([[0, 1], [0, 0]]))
    with pytest.raises(ValueError):
        Network.from_adjacency(np.array([[1, 0], [0, 0]]))
    net = Network.from_adjacency(np.array([[0, 1], [1, 0]]))
    assert net.edge_count == 1


def test_permuted_preserves_structure():
    net = Network.from_edges(4, [(0, 1), (1, 2)])
    perm = [3, 2, 1, 0]
    relabeled = net.permuted(perm)
    assert relabeled.edge_count == 2
    assert relabeled.has_edge(3, 2) and relabeled.has_edge(2, 1)
    with pytest.raises(ValueError):
        net.permuted([0, 0, 1, 2])


def test_parse_errors_carry_line_numbers():
    with pytest.raises(EdgeListParseError, match="line 1"):
        parse_edgelist_text("0 1\n")
    with pytest.raises(EdgeListParseError, match="line 2"):
        parse_edgelist_text("n 3\n0 5\n")
    with pytest.raises(EdgeListParseError, match="line 3"):
        parse_edgelist_text("n 3\n0 1\nx y\n")
    with pytest.raises(EdgeListParseError):
        parse_edgelist_text("# only comments\n")


def test_parse_accepts_comments_and_header():
    n, arcs = parse_edgelist_text("# hello\nn 5\n0 1\n1 1\n0 1\n")
    assert n == 5 and arcs == [(0, 1), (1, 1), (0, 1)]


def test_as_dyad_normalizes():
    assert as_dyad(3, 1, 5) == (1, 3)
