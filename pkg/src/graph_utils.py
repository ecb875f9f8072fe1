"""
This module contains functions for the graphs that live on top of the
surface construction: conversions between k-dimensional grid indices
and flat node numbers, grid adjacency, and the overlap graph of a ball
cover.

The flat numbering is row-major, so the node of index (i_1, ..., i_k) in
a grid of shape (m_1, ..., m_k) is ((i_1 m_2 + i_2) m_3 + ...) + i_k.
"""

from typing import List, Sequence, Set, Tuple

import networkx as nx  # type: ignore
import numpy as np
from scipy.spatial import cKDTree  # type: ignore


def node_tuple_to_int(node: Sequence[int], shape: Sequence[int]) -> int:
    """
    Converts a grid node given by its index tuple to an integer.

    Parameters:
        node: Index along every grid axis.
        shape: Number of nodes along every axis.

    Returns:
        An integer representing the node.
    """
    flat = 0
    for coord, width in zip(node, shape):
        flat = flat * width + int(coord)
    return flat


def node_int_to_tuple(node: int, shape: Sequence[int]) -> Tuple[int, ...]:
    """
    Converts an integer node representation to its index tuple.

    Parameters:
        node: An integer representing the node.
        shape: Number of nodes along every axis.

    Returns:
        The index along every grid axis.
    """
    coords: List[int] = []
    for width in reversed(shape):
        coords.append(node % width)
        node //= width
    return tuple(reversed(coords))


def grid_adjacent(a: int, b: int, shape: Sequence[int]) -> bool:
    """
    Whether two nodes are equal or touch (including diagonally).

    Parameters:
        a: First node.
        b: Second node.
        shape: Grid shape.

    Returns:
        True when the index tuples differ by at most one on every axis.
    """
    first = node_int_to_tuple(a, shape)
    second = node_int_to_tuple(b, shape)
    return all(abs(i - j) <= 1 for i, j in zip(first, second))


def close_nonadjacent_pairs(
    points: np.ndarray,
    nodes: np.ndarray,
    shape: Sequence[int],
    tolerance: float,
) -> Set[Tuple[int, int]]:
    """
    Pairs of grid nodes whose images nearly coincide although the nodes
    are not grid neighbours.

    Parameters:
        points: Images of the nodes, shape (m, n).
        nodes: Flat node numbers of the rows of `points`.
        shape: Grid shape.
        tolerance: Distance under which images count as coincident.

    Returns:
        The offending node pairs.
    """
    pairs = cKDTree(points).query_pairs(tolerance)
    return {
        (int(nodes[i]), int(nodes[j]))
        for i, j in sorted(pairs)
        if not grid_adjacent(int(nodes[i]), int(nodes[j]), shape)
    }


def cover_overlap_graph(centers: np.ndarray, radii: np.ndarray) -> nx.Graph:
    """
    Graph of a ball cover with an edge between every two intersecting balls.

    Parameters:
        centers: Ball centers, shape (m, n).
        radii: Ball radii, shape (m,).

    Returns:
        A NetworkX graph on the ball indices.
    """
    graph = nx.Graph()
    graph.add_nodes_from(range(len(centers)))
    if len(centers) < 2:
        return graph
    pairs = cKDTree(centers).query_pairs(2 * float(np.max(radii)))
    for i, j in sorted(pairs):
        if np.linalg.norm(centers[i] - centers[j]) <= radii[i] + radii[j]:
            graph.add_edge(i, j)
    return graph


def count_components(graph: nx.Graph) -> int:
    """Number of connected components."""
    return nx.number_connected_components(graph)
