"""
This module contains the metric primitives: sample clouds with a
spatial index, closed balls, discretized plane patches, Hausdorff and
Grassmann distances, projections and the best-fit plane search.
"""

import logging
import math
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Tuple, Union

import numpy as np
from scipy.linalg import expm  # type: ignore
from scipy.optimize import minimize  # type: ignore
from scipy.spatial import cKDTree  # type: ignore

from .errors import ContractViolationError, DegenerateFitError
from .exterior_algebra import (
    ConstantKForm,
    OrientedPlane,
    complement_rows,
    evaluate,
)

logger = logging.getLogger(__name__)

MAX_PATCH_POINTS = 20_000

FIT_MAX_ITER = 500
FIT_REL_TOL = 1e-6
SIMPLEX_OFFSET_STEP = 0.1
SIMPLEX_ANGLE_STEP = 0.1


class PointCloud:
    """
    A finite sample set in R^n with a KD-tree index.

    Attributes:
        points: Read-only array of shape (m, n).
        k: Asserted intrinsic dimension.
        resolution: Largest distance from a point to its nearest distinct
            neighbour (0 for a single point).
        tree: The cKDTree over `points`.
    """

    def __init__(
        self,
        points: np.ndarray,
        k: int,
        resolution: Optional[float] = None,
    ):
        points = np.array(points, dtype=float)
        if points.ndim != 2 or len(points) == 0:
            raise ContractViolationError("a cloud needs a nonempty (m, n) array")
        if not 1 <= k <= points.shape[1]:
            raise ContractViolationError(
                f"intrinsic dimension {k} out of range for R^{points.shape[1]}"
            )
        points.flags.writeable = False
        self.points = points
        self.k = k
        self.tree = cKDTree(points)
        self.resolution = (
            measure_resolution(points) if resolution is None else float(resolution)
        )

    @classmethod
    def build(cls, points: np.ndarray, k: int) -> "PointCloud":
        """Index a point array and measure its resolution."""
        cloud = cls(points, k)
        logger.debug(
            "cloud of %d points in R^%d, resolution %.4g",
            len(cloud),
            cloud.n,
            cloud.resolution,
        )
        return cloud

    @property
    def n(self) -> int:
        return self.points.shape[1]

    def __len__(self) -> int:
        return len(self.points)

    def __getstate__(self) -> Dict[str, Any]:
        state = self.__dict__.copy()
        del state["tree"]
        return state

    def __setstate__(self, state: Dict[str, Any]):
        self.__dict__.update(state)
        self.tree = cKDTree(self.points)

    def nearest(self, queries: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """
        Nearest cloud point of every query.

        Returns:
            Distances and indices into `points`.
        """
        return self.tree.query(np.asarray(queries, dtype=float))

    def in_ball(self, ball: "Ball") -> np.ndarray:
        """Sorted indices of the points in a closed ball."""
        return np.asarray(
            self.tree.query_ball_point(ball.center, ball.radius, return_sorted=True),
            dtype=int,
        )

    def points_in(self, ball: "Ball") -> np.ndarray:
        return self.points[self.in_ball(ball)]

    def transformed(
        self,
        rotation: Optional[np.ndarray] = None,
        shift: Optional[np.ndarray] = None,
        scale: float = 1.0,
    ) -> "PointCloud":
        """
        The cloud under x -> scale * R x + shift.

        Parameters:
            rotation: Orthogonal matrix R, the identity by default.
            shift: Translation, zero by default.
            scale: Positive dilation.

        Returns:
            A new cloud; its resolution is scaled, not re-measured.
        """
        points = self.points
        if rotation is not None:
            points = points @ np.asarray(rotation, dtype=float).T
        points = scale * points
        if shift is not None:
            points = points + np.asarray(shift, dtype=float)
        return PointCloud(points, self.k, resolution=scale * self.resolution)


def measure_resolution(points: np.ndarray) -> float:
    """
    Largest distance from a point to its nearest distinct point.

    Parameters:
        points: Array of shape (m, n).

    Returns:
        The resolution h; 0 when there is only one distinct point.
    """
    unique = np.unique(np.asarray(points, dtype=float), axis=0)
    if len(unique) < 2:
        return 0.0
    distances, _ = cKDTree(unique).query(unique, k=2)
    return float(distances[:, 1].max())


@dataclass(frozen=True, eq=False)
class Ball:
    """A closed ball B_r(x)."""

    center: np.ndarray
    radius: float

    def __post_init__(self):
        if not self.radius > 0:
            raise ContractViolationError(f"ball radius must be positive, got {self.radius}")
        center = np.array(self.center, dtype=float).reshape(-1)
        center.flags.writeable = False
        object.__setattr__(self, "center", center)
        object.__setattr__(self, "radius", float(self.radius))

    def contains(self, points: np.ndarray) -> np.ndarray:
        """Membership mask of points in the closed ball."""
        offsets = np.asarray(points, dtype=float) - self.center
        return np.linalg.norm(np.atleast_2d(offsets), axis=1) <= self.radius

    def to_json(self) -> Dict[str, Any]:
        return {"center": [float(v) for v in self.center], "radius": self.radius}


def plane_patch_points(
    plane: OrientedPlane,
    ball: Ball,
    spacing: float,
    max_points: int = MAX_PATCH_POINTS,
) -> np.ndarray:
    """
    Discretize plane ∩ ball by a grid in frame coordinates.

    The grid is centered at the foot of the ball center on the plane and
    keeps the nodes inside the disk of radius sqrt(r^2 - d^2). When the
    node count would exceed `max_points` the spacing is enlarged.

    Parameters:
        plane: The plane.
        ball: The closed ball.
        spacing: Requested grid spacing.
        max_points: Cap on the number of nodes.

    Returns:
        Array of shape (m, n); empty when the plane misses the ball.
    """
    offset = ball.center - plane.base
    along = offset @ plane.frame.T
    foot = plane.base + along @ plane.frame
    rho_sq = ball.radius**2 - float(np.sum((ball.center - foot) ** 2))
    if rho_sq < 0:
        return np.zeros((0, plane.n))
    rho = math.sqrt(rho_sq)

    k = plane.k
    min_spacing = 2 * rho / max(max_points ** (1 / k) - 1, 1.0)
    if spacing < min_spacing:
        logger.debug("patch spacing raised from %.3g to %.3g", spacing, min_spacing)
        spacing = min_spacing

    steps = int(math.floor(rho / spacing)) if spacing > 0 else 0
    axis = spacing * np.arange(-steps, steps + 1)
    coords = np.stack(np.meshgrid(*([axis] * k), indexing="ij"), axis=-1).reshape(-1, k)
    coords = coords[np.sum(coords**2, axis=1) <= rho_sq]
    return foot + coords @ plane.frame


@dataclass(frozen=True, eq=False)
class PlanePatch:
    """The piece plane ∩ ball, discretized at `spacing`."""

    plane: OrientedPlane
    ball: Ball
    spacing: float

    def points(self) -> np.ndarray:
        return plane_patch_points(self.plane, self.ball, self.spacing)


SampleSet = Union[PointCloud, PlanePatch, np.ndarray]


def _as_indexed(samples: SampleSet) -> Tuple[np.ndarray, Any]:
    if isinstance(samples, PointCloud):
        return samples.points, samples.tree
    points = samples.points() if isinstance(samples, PlanePatch) else samples
    points = np.atleast_2d(np.asarray(points, dtype=float))
    if points.size == 0:
        raise ContractViolationError("Hausdorff distance of an empty set")
    return points, cKDTree(points)


def hausdorff_distance(a: SampleSet, b: SampleSet) -> float:
    """
    Hausdorff distance between two finite samples.

    Parameters:
        a: A cloud, a plane patch or an (m, n) array.
        b: Same.

    Returns:
        max(sup_a inf_b |a - b|, sup_b inf_a |a - b|).
    """
    points_a, tree_a = _as_indexed(a)
    points_b, tree_b = _as_indexed(b)
    if points_a.shape[1] != points_b.shape[1]:
        raise ContractViolationError(
            f"sets live in R^{points_a.shape[1]} and R^{points_b.shape[1]}"
        )
    forward, _ = tree_b.query(points_a)
    backward, _ = tree_a.query(points_b)
    return float(max(forward.max(), backward.max()))


def _check_same_type(p: OrientedPlane, q: OrientedPlane):
    if (p.n, p.k) != (q.n, q.k):
        raise ContractViolationError(
            f"cannot compare a {p.k}-plane in R^{p.n} with a {q.k}-plane in R^{q.n}"
        )


def grassmann_distance(p: OrientedPlane, q: OrientedPlane) -> float:
    """
    Operator norm of the difference of the orthogonal projectors.

    Equals the sine of the largest principal angle; base points and
    orientations are ignored.
    """
    _check_same_type(p, q)
    value = float(np.linalg.norm(p.projector() - q.projector(), ord=2))
    return min(value, 1.0)


def grassmann_distances(frames: np.ndarray, reference: np.ndarray) -> np.ndarray:
    """
    Batched Grassmann distances from many orthonormal frames to one.

    Parameters:
        frames: Array of shape (m, k, n).
        reference: Array of shape (k, n).

    Returns:
        Array of shape (m,).
    """
    frames = np.asarray(frames, dtype=float)
    projectors = np.einsum("mki,mkj->mij", frames, frames)
    target = reference.T @ reference
    values = np.linalg.norm(projectors - target, ord=2, axis=(-2, -1))
    return np.minimum(values, 1.0)


def project(plane: OrientedPlane, x: np.ndarray) -> np.ndarray:
    """
    Orthogonal projection onto the affine plane.

    Parameters:
        plane: The plane.
        x: A point (n,) or points (m, n).

    Returns:
        The projected point(s).
    """
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != plane.n:
        raise ContractViolationError(
            f"point in R^{x.shape[-1]} cannot be projected to a plane in R^{plane.n}"
        )
    return plane.embed(plane.coordinates(x))


def pca_plane(points: np.ndarray, k: int) -> OrientedPlane:
    """
    Least-squares k-plane through the centroid.

    The frame is the top-k right singular vectors, each signed so that its
    largest entry is positive.

    Parameters:
        points: Array of shape (m, n), m >= 1.
        k: Plane dimension.

    Returns:
        The plane.
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    centroid = points.mean(axis=0)
    _, _, vt = np.linalg.svd(points - centroid, full_matrices=True)
    frame = vt[:k].copy()
    for row in frame:
        if row[np.argmax(np.abs(row))] < 0:
            row *= -1
    return OrientedPlane(centroid, frame)


def distances_to_disk(
    points: np.ndarray,
    plane: OrientedPlane,
    ball: Ball,
) -> np.ndarray:
    """
    Exact distances from points to the flat disk plane ∩ ball.

    Returns:
        Array of shape (m,); +inf everywhere when the plane misses the ball.
    """
    along = plane.coordinates(ball.center)
    rho_sq = ball.radius**2 - float(np.sum((ball.center - plane.embed(along)) ** 2))
    if rho_sq < 0:
        return np.full(len(points), np.inf)
    rho = math.sqrt(rho_sq)

    coords = plane.coordinates(points) - along
    radial = np.linalg.norm(coords, axis=1)
    outside = radial > rho
    coords[outside] *= (rho / radial[outside])[:, None]
    nearest = plane.embed(coords + along)
    return np.linalg.norm(points - nearest, axis=1)


def farthest_point_net(
    points: np.ndarray,
    start: int,
    max_count: int,
    stop_radius: float = 0.0,
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Greedy farthest-point ordering.

    Parameters:
        points: Array of shape (m, n).
        start: Index of the first net point.
        max_count: Upper bound on the number of net points.
        stop_radius: Stop once the covering radius is at most this.

    Returns:
        The selected indices and, for every prefix of them, the largest
        distance from a point to that prefix.
    """
    points = np.asarray(points, dtype=float)
    order = [int(start)]
    nearest = np.linalg.norm(points - points[start], axis=1)
    radii = [float(nearest.max())]
    while len(order) < max_count and radii[-1] > stop_radius:
        chosen = int(np.argmax(nearest))
        order.append(chosen)
        nearest = np.minimum(nearest, np.linalg.norm(points - points[chosen], axis=1))
        radii.append(float(nearest.max()))
    return np.array(order, dtype=int), np.array(radii)


class PlaneCoordinates:
    """
    Local parameters around a start plane: normal offsets (in units of r)
    and a rotation generator mixing frame and normal directions.
    """

    def __init__(self, start: OrientedPlane, radius: float):
        self.start = start
        self.radius = radius
        self.k = start.k
        self.codim = start.n - start.k
        self.normals = complement_rows(start.frame)
        self.basis = np.vstack([start.frame, self.normals])

    @property
    def size(self) -> int:
        return self.codim * (self.k + 1)

    def plane(self, params: np.ndarray) -> OrientedPlane:
        offset = params[: self.codim]
        generator = params[self.codim:].reshape(self.codim, self.k)
        skew = np.zeros((self.k + self.codim, self.k + self.codim))
        skew[self.k:, : self.k] = generator
        skew[: self.k, self.k:] = -generator.T
        frame = (expm(skew) @ self.basis)[: self.k]
        frame = _reorthonormalize(frame)
        base = self.start.base + self.radius * offset @ self.normals
        return OrientedPlane(base, frame)

    def initial_simplex(self) -> np.ndarray:
        steps = np.concatenate(
            [
                np.full(self.codim, SIMPLEX_OFFSET_STEP),
                np.full(self.codim * self.k, SIMPLEX_ANGLE_STEP),
            ]
        )
        return np.vstack([np.zeros(self.size), np.diag(steps)])


def _reorthonormalize(frame: np.ndarray) -> np.ndarray:
    # expm of a skew matrix is orthogonal only up to rounding
    q, r = np.linalg.qr(frame.T)
    signs = np.sign(np.diagonal(r))
    signs[signs == 0] = 1.0
    return (q * signs).T


def best_fit_plane(
    cloud: PointCloud,
    ball: Ball,
    k: Optional[int] = None,
    mode: str = "symmetric",
    calibration: Optional[ConstantKForm] = None,
    candidates: Optional[List[OrientedPlane]] = None,
    max_iter: int = FIT_MAX_ITER,
) -> Tuple[OrientedPlane, float]:
    """
    Search the affine k-plane best approximating cloud ∩ ball.

    The search starts from the PCA plane of the points in the ball and
    runs Nelder-Mead over the plane's local parameters on a subsample.
    The returned value is the exact objective of the best candidate.

    Parameters:
        cloud: The sample set.
        ball: The closed ball B_r(x).
        k: Plane dimension, the cloud's by default.
        mode: "one-sided" (sup of point-to-plane distances) or
            "symmetric" (Hausdorff distance to the plane patch).
        calibration: When given, the plane is oriented so this form is
            nonnegative on it.
        candidates: Extra planes scored alongside the search result.
        max_iter: Nelder-Mead iteration cap.

    Returns:
        The plane and its objective value, in length units.
    """
    # import here, fit_objectives depends on this module
    from .fit_objectives import make_objective

    k = cloud.k if k is None else k
    indices = cloud.in_ball(ball)
    if len(indices) == 0:
        raise ContractViolationError(
            f"ball of radius {ball.radius:.4g} contains no cloud points"
        )
    points = cloud.points[indices]
    start = pca_plane(points, k)
    if len(points) < k + 1:
        raise DegenerateFitError(
            f"{len(points)} points cannot determine a {k}-plane", start, len(points)
        )

    exact = make_objective(mode, points, ball)
    pool = [start]
    iterations = 0
    if k < cloud.n:
        search = make_objective(mode, points, ball, search=True)
        coords = PlaneCoordinates(start, ball.radius)
        start_value = search.value(start)
        result = minimize(
            lambda params: search.value(coords.plane(params)),
            np.zeros(coords.size),
            method="Nelder-Mead",
            options={
                "maxiter": max_iter,
                "initial_simplex": coords.initial_simplex(),
                "xatol": FIT_REL_TOL,
                "fatol": FIT_REL_TOL * max(start_value, 1e-9 * ball.radius),
            },
        )
        pool.append(coords.plane(result.x))
        iterations = result.nit

    if candidates:
        pool.extend(candidates)
    elif mode == "one-sided":
        # the symmetric optimum bounds the one-sided objective from above
        pool.append(
            best_fit_plane(cloud, ball, k, "symmetric", None, None, max_iter)[0]
        )

    values = [exact.value(plane) for plane in pool]
    best = int(np.argmin(values))
    plane, value = pool[best], values[best]

    if calibration is not None and evaluate(calibration, plane) < 0:
        plane = plane.flipped()

    logger.debug(
        "%s fit at r=%.4g over %d points: %.4g (%d iterations)",
        mode,
        ball.radius,
        len(points),
        value,
        iterations,
    )
    return plane, float(value)
