"""
Unit tests for graph_utils module.
"""

import numpy as np

from src.graph_utils import (
    close_nonadjacent_pairs,
    count_components,
    cover_overlap_graph,
    grid_adjacent,
    node_int_to_tuple,
    node_tuple_to_int,
)


# node conversion tests
def test_tuple_to_int_row_major():
    """Tests if the last axis varies fastest."""
    assert node_tuple_to_int((0, 0), (3, 4)) == 0
    assert node_tuple_to_int((0, 1), (3, 4)) == 1
    assert node_tuple_to_int((1, 0), (3, 4)) == 4
    assert node_tuple_to_int((2, 1, 3), (3, 2, 5)) == 28


def test_int_to_tuple_inverts():
    """Tests if converting back gives the original index tuple."""
    shape = (3, 2, 5)
    for node in range(30):
        assert node_tuple_to_int(node_int_to_tuple(node, shape), shape) == node


# grid_adjacent tests
def test_grid_adjacent_diagonal():
    """Tests if diagonal neighbours count as adjacent."""
    shape = (5, 5)
    center = node_tuple_to_int((2, 2), shape)
    assert grid_adjacent(center, node_tuple_to_int((3, 3), shape), shape)
    assert grid_adjacent(center, center, shape)
    assert not grid_adjacent(center, node_tuple_to_int((4, 2), shape), shape)


def test_row_wrap_is_not_adjacent():
    """Tests if the end of a row does not touch the start of the next."""
    shape = (3, 4)
    assert not grid_adjacent(node_tuple_to_int((0, 3), shape), node_tuple_to_int((1, 0), shape), shape)


# close_nonadjacent_pairs tests
def test_folded_grid_pairs():
    """Tests if only far-apart nodes with close images are reported."""
    shape = (1, 5)
    points = np.array([[0.0, 0.0], [1.0, 0.0], [2.0, 0.0], [1.0, 0.01], [0.0, 0.01]])
    pairs = close_nonadjacent_pairs(points, np.arange(5), shape, 0.05)
    assert pairs == {(0, 4), (1, 3)}


def test_straight_grid_has_no_pairs():
    """Tests if an embedded grid gives no pairs."""
    shape = (1, 5)
    points = np.column_stack([np.arange(5.0), np.zeros(5)])
    assert close_nonadjacent_pairs(points, np.arange(5), shape, 0.5) == set()


# cover_overlap_graph tests
def test_overlap_graph_components():
    """Tests if touching balls are joined and distant ones are not."""
    centers = np.array([[0.0, 0.0], [1.0, 0.0], [2.0, 0.0], [10.0, 0.0]])
    graph = cover_overlap_graph(centers, np.array([0.5, 0.5, 0.5, 0.5]))
    assert graph.has_edge(0, 1) and graph.has_edge(1, 2)
    assert not graph.has_edge(0, 2)
    assert count_components(graph) == 2


def test_overlap_graph_of_one_ball():
    """Tests if a single ball is one component."""
    graph = cover_overlap_graph(np.zeros((1, 3)), np.array([1.0]))
    assert count_components(graph) == 1
