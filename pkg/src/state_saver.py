"""
This module contains functions for writing everything the toolkit
produces: JSON documents, CSV clouds and profiles, surface exports and
the per-level state of the surface builder.
"""

import csv
import json
import os
from typing import Any, Dict, List, Optional, Sequence

import numpy as np


def _ensure_parent(filepath: str):
    parent = os.path.dirname(filepath)
    if parent and not os.path.isdir(parent):
        os.makedirs(parent)


def dump_json(document: Dict[str, Any]) -> str:
    """
    Serialize a document deterministically.

    Parameters:
        document: JSON-compatible data (plain floats, ints, lists, dicts).

    Returns:
        The text, with sorted keys and a trailing newline.
    """
    return json.dumps(document, indent=2, sort_keys=True) + "\n"


def save_json(document: Dict[str, Any], filepath: str):
    """Write a JSON document."""
    _ensure_parent(filepath)
    with open(filepath, mode="w") as file:
        file.write(dump_json(document))


def reset_state_file(filepath: str):
    """Create an empty JSON Lines state file, removing old contents."""
    _ensure_parent(filepath)
    open(filepath, "w").close()


def save_level_state(
    level: int,
    radius: float,
    cover_size: int,
    grid_nodes: int,
    max_displacement: float,
    aborted: bool,
    filepath: str = "data/builder_state.jsonl",
    diagnostic: Optional[Dict[str, Any]] = None,
):
    """
    Appends the state of the builder after one level as a JSON object.

    Parameters:
        level: The level index a.
        radius: The level's scale r_a.
        cover_size: Number of balls in the level's Vitali cover.
        grid_nodes: Number of surface grid nodes.
        max_displacement: Largest node displacement against the
            previous level.
        aborted: Whether gluing failed at this level.
        filepath: Path to the JSON Lines file.
        diagnostic: Error details of an aborted level.
    """
    state = {
        "level": int(level),
        "radius": float(radius),
        "cover_size": int(cover_size),
        "grid_nodes": int(grid_nodes),
        "max_displacement": float(max_displacement),
        "aborted": bool(aborted),
    }
    if diagnostic is not None:
        state["diagnostic"] = diagnostic

    _ensure_parent(filepath)
    with open(filepath, mode="a") as file:
        file.write(json.dumps(state, sort_keys=True) + "\n")


def save_cloud_csv(
    points: np.ndarray,
    filepath: str,
    comments: Sequence[str] = (),
):
    """
    Write a cloud as CSV, one point per row.

    Parameters:
        points: Array of shape (m, n).
        filepath: Destination.
        comments: Lines written first, each prefixed with '#'.
    """
    _ensure_parent(filepath)
    with open(filepath, mode="w", newline="") as file:
        for line in comments:
            file.write(f"# {line}\n")
        writer = csv.writer(file)
        for point in np.asarray(points, dtype=float):
            writer.writerow([repr(float(v)) for v in point])


def save_rows_csv(rows: List[Dict[str, Any]], filepath: str):
    """Write a list of flat dictionaries as CSV with a header row."""
    _ensure_parent(filepath)
    with open(filepath, mode="w", newline="") as file:
        if not rows:
            return
        writer = csv.DictWriter(file, fieldnames=list(rows[0]))
        writer.writeheader()
        writer.writerows(rows)


def save_surface_csv(coords: np.ndarray, positions: np.ndarray, filepath: str):
    """
    Write a parameterized surface as CSV.

    Every row holds the grid coordinates u_1..u_k on the base plane
    followed by the image point x_1..x_n.
    """
    k, n = coords.shape[1], positions.shape[1]
    header = [f"u{i + 1}" for i in range(k)] + [f"x{i + 1}" for i in range(n)]
    _ensure_parent(filepath)
    with open(filepath, mode="w", newline="") as file:
        writer = csv.writer(file)
        writer.writerow(header)
        for u, x in zip(coords, positions):
            writer.writerow([repr(float(v)) for v in np.concatenate([u, x])])


def save_surface_ply(
    positions: np.ndarray,
    shape: Sequence[int],
    filepath: str,
):
    """
    Write a 2-dimensional grid surface as an ASCII PLY quad mesh.

    Only the first three ambient coordinates are written; further
    coordinates are stored as extra vertex properties.

    Parameters:
        positions: Node images in row-major grid order, shape (m, n).
        shape: Grid shape (rows, cols).
        filepath: Destination.
    """
    if len(shape) != 2:
        raise ValueError("PLY export needs a 2-dimensional grid")
    rows, cols = shape
    n = positions.shape[1]
    names = ["x", "y", "z"] + [f"x{i + 1}" for i in range(3, n)]
    padded = np.zeros((len(positions), max(n, 3)))
    padded[:, :n] = positions

    faces = [
        (r * cols + c, r * cols + c + 1, (r + 1) * cols + c + 1, (r + 1) * cols + c)
        for r in range(rows - 1)
        for c in range(cols - 1)
    ]

    _ensure_parent(filepath)
    with open(filepath, mode="w") as file:
        file.write("ply\nformat ascii 1.0\n")
        file.write(f"element vertex {len(padded)}\n")
        for name in names:
            file.write(f"property double {name}\n")
        file.write(f"element face {len(faces)}\n")
        file.write("property list uchar int vertex_indices\nend_header\n")
        for vertex in padded:
            file.write(" ".join(repr(float(v)) for v in vertex) + "\n")
        for face in faces:
            file.write("4 " + " ".join(str(i) for i in face) + "\n")
