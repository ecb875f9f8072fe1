"""
This module contains functions for reading the toolkit's inputs and the
files written by the state_saver module: CSV clouds, JSON documents and
the per-level JSON Lines state of the surface builder.
"""

import json
from typing import Any, Callable, Dict, Iterator, List

import numpy as np

from .errors import ContractViolationError

DEFAULT_FILE_PATH = "data/builder_state.jsonl"


def load_cloud_csv(file_path: str) -> np.ndarray:
    """
    Load a CSV cloud, one point per row.

    Lines starting with '#' are comments; the dimension is taken from the
    first data row and every other row must match it.

    Parameters:
        file_path: The path to the CSV file.

    Returns:
        Array of shape (m, n).
    """
    try:
        points = np.loadtxt(file_path, delimiter=",", comments="#", ndmin=2)
    except ValueError as error:
        raise ContractViolationError(f"cannot parse {file_path}: {error}") from None
    if points.size == 0:
        raise ContractViolationError(f"{file_path} holds no points")
    return points


def load_json(file_path: str) -> Dict[str, Any]:
    """Load a JSON document."""
    with open(file_path, mode="r") as file:
        return json.load(file)


def _read_levels(file_path: str) -> Iterator[Dict[str, Any]]:
    with open(file_path, mode="r") as file:
        for line in file:
            if line.strip():
                yield json.loads(line)


def load_all_levels(file_path: str = DEFAULT_FILE_PATH) -> List[Dict[str, Any]]:
    """
    Load the states of all builder levels from the JSON Lines file.

    Parameters:
        file_path: The path to the JSON Lines file.

    Returns:
        One dictionary per level, in the order they were built.
    """
    return list(_read_levels(file_path))


def load_level_by_index(file_path: str, level: int) -> Dict[str, Any]:
    """
    Load the state of one level from the JSON Lines file.

    Parameters:
        file_path: The path to the JSON Lines file.
        level: The level index a to retrieve.

    Returns:
        The state of that level.
    """
    for state in _read_levels(file_path):
        if state["level"] == level:
            return state

    raise ValueError(f"Level {level} not found in {file_path}")


def filter_levels(
    file_path: str,
    condition: Callable[[Dict[str, Any]], bool],
) -> List[Dict[str, Any]]:
    """
    Load the level states that meet a condition, e.g. the aborted ones.

    Parameters:
        file_path: The path to the JSON Lines file.
        condition: Predicate on a state dictionary.

    Returns:
        The matching states in file order.
    """
    return [state for state in _read_levels(file_path) if condition(state)]
