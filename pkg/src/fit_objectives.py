"""
This module implements the objectives that the best-fit plane search
can minimize over the cloud points found in one ball.
"""

# mypy: no_implicit_optional = False

from abc import ABC, abstractmethod
from typing import Optional

import numpy as np
from scipy.spatial import cKDTree  # type: ignore

from .errors import ContractViolationError
from .exterior_algebra import OrientedPlane
from .geometry_core import Ball, distances_to_disk, plane_patch_points, project

# Symmetric objectives compare against a plane patch of spacing r / 32
PATCH_DIVISIONS = 32
# The search uses a coarser patch and at most this many cloud points
SEARCH_PATCH_DIVISIONS = 16
FIT_SAMPLE_CAP = 4096

FIT_MODES = ("one-sided", "symmetric")


def subsample(points: np.ndarray, cap: int) -> np.ndarray:
    """Evenly spaced rows of `points`, at most `cap` of them."""
    if len(points) <= cap:
        return points
    picks = np.linspace(0, len(points) - 1, cap).astype(int)
    return points[picks]


class FitObjective(ABC):
    """
    This strategy scores a candidate plane against the cloud points
    contained in a ball. Lower is better; values are lengths.
    """

    def __init__(self, points: np.ndarray, ball: Ball):
        self.points = points
        self.ball = ball

    @abstractmethod
    def value(self, plane: OrientedPlane) -> float:
        pass


class OneSidedObjective(FitObjective):
    def value(self, plane: OrientedPlane) -> float:
        """
        Largest distance from a cloud point to the (infinite) plane.

        Parameters:
            plane: The candidate plane.

        Returns:
            sup over points p of |p - pi(p)|.
        """
        offsets = self.points - plane.base
        residual = offsets - (offsets @ plane.frame.T) @ plane.frame
        return float(np.linalg.norm(residual, axis=1).max())


class SymmetricObjective(FitObjective):
    def __init__(
        self,
        points: np.ndarray,
        ball: Ball,
        spacing: float,
        sample_cap: Optional[int] = None,
    ):
        super().__init__(points, ball)
        self.spacing = spacing
        self.tree = cKDTree(points)
        self.disk_points = points if sample_cap is None else subsample(points, sample_cap)

    def value(self, plane: OrientedPlane) -> float:
        """
        Hausdorff distance between the cloud points and plane ∩ ball.

        Cloud-to-disk distances are exact; disk-to-cloud distances are
        taken from the patch grid.

        Parameters:
            plane: The candidate plane.

        Returns:
            The distance, or r + dist(center, plane) when the plane
            misses the ball.
        """
        patch = plane_patch_points(plane, self.ball, self.spacing)
        if len(patch) == 0:
            foot = project(plane, self.ball.center)
            return self.ball.radius + float(np.linalg.norm(self.ball.center - foot))

        to_disk = distances_to_disk(self.disk_points, plane, self.ball).max()
        to_cloud, _ = self.tree.query(patch)
        return float(max(to_disk, to_cloud.max()))


def make_objective(
    mode: str,
    points: np.ndarray,
    ball: Ball,
    search: bool = False,
) -> FitObjective:
    """
    Build the objective for a fit mode.

    Parameters:
        mode: "one-sided" or "symmetric".
        points: The cloud points in the ball.
        ball: The ball.
        search: Cheaper variant used inside the optimizer loop.

    Returns:
        The objective.
    """
    if mode == "one-sided":
        return OneSidedObjective(
            subsample(points, FIT_SAMPLE_CAP) if search else points, ball
        )
    if mode == "symmetric":
        divisions = SEARCH_PATCH_DIVISIONS if search else PATCH_DIVISIONS
        return SymmetricObjective(
            points,
            ball,
            ball.radius / divisions,
            sample_cap=FIT_SAMPLE_CAP if search else None,
        )
    raise ContractViolationError(f"unknown fit mode {mode!r}; expected {FIT_MODES}")
