"""
This module builds the family of approximating surfaces S_r of a
Reifenberg-flat sample set and checks the properties the family must
have.

Every surface is a map from a regular k-dimensional grid on a fixed base
plane into R^n. Level a of the family lives at scale r_a = eps 2^-a: a
Vitali cover of the cloud is selected at that scale, a plane is fitted
in every ball and the previous surface is glued onto those planes with a
normalized partition of unity. Outside B_{1+eps} every surface is the
base plane itself.
"""

# mypy: no_implicit_optional = False

import itertools
import logging
import math
import time
from dataclasses import dataclass
from functools import cached_property, partial
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.spatial import cKDTree  # type: ignore

from .errors import (
    ContractViolationError,
    DegenerateFitError,
    GluingError,
    ResolutionError,
)
from .exterior_algebra import CalibrationField, OrientedPlane, evaluate, orthonormalize_rows
from .fit_objectives import make_objective
from .geometry_core import (
    FIT_MAX_ITER,
    Ball,
    PointCloud,
    best_fit_plane,
    grassmann_distances,
    hausdorff_distance,
    pca_plane,
    project,
)
from .graph_utils import close_nonadjacent_pairs, count_components, cover_overlap_graph
from .parallel import CHUNKS_PER_WORKER, parallel_map
from .state_saver import reset_state_file, save_level_state

logger = logging.getLogger(__name__)

# Default grid spacing is the finest scale over this
GRID_DIVISIONS = 8
MAX_GRID_NODES = 250_000
# Bumps are supported on B_{blend r_i}(y_i)
BLEND_FACTOR = 2.0
GLUE_MAX_GRASSMANN = 0.5
# Covers need h <= r / 10
COVER_RESOLUTION_FACTOR = 10.0
# Candidate planes of a cell disagree when their distances to it differ by more
PLANE_DISAGREEMENT = 0.1
# Images closer than g / 10 count as coincident
INJECTIVITY_FRACTION = 0.1
STABILITY_FACTOR = 2.0
ZERO_TOL = 1e-9

FIT_MODES = ("symmetric", "pca")


@dataclass(frozen=True)
class ScaleFunction:
    """
    Piecewise-linear scale r_{|y|}: r for |y| <= 1, eps for |y| >= 1 + eps,
    linear in between.
    """

    r: float
    epsilon: float

    def __post_init__(self):
        if self.r <= 0 or self.epsilon <= 0:
            raise ContractViolationError("scales must be positive")

    def __call__(self, radius: Any) -> Any:
        radius = np.asarray(radius, dtype=float)
        t = (radius - 1.0) / self.epsilon
        values = np.where(
            t <= 0.0,
            self.r,
            np.where(t >= 1.0, self.epsilon, self.r + (self.epsilon - self.r) * t),
        )
        return float(values) if values.ndim == 0 else values


@dataclass(frozen=True, eq=False)
class VitaliCover:
    """
    Balls B_{r_i}(y_i) with pairwise disjoint fifths, covering the cloud
    in B_{1+eps}, each with a fitted plane.

    Attributes:
        centers: y_i, shape (m, n).
        center_indices: Cloud indices of the centers.
        radii: r_i = r_{|y_i|}.
        planes: Fitted plane per ball.
        thetas: Symmetric objective of each plane divided by r_i.
        degenerate: Balls whose plane is a least-squares fallback.
        fit_mode: "symmetric" or "pca".
    """

    centers: np.ndarray
    center_indices: np.ndarray
    radii: np.ndarray
    planes: List[OrientedPlane]
    thetas: np.ndarray
    degenerate: np.ndarray
    fit_mode: str = "symmetric"

    def __len__(self) -> int:
        return len(self.centers)

    def fifth_balls_disjoint(self) -> bool:
        """Exhaustive check that the balls B_{r_i/5}(y_i) are disjoint."""
        for i in range(len(self) - 1):
            gaps = np.linalg.norm(self.centers[i + 1:] - self.centers[i], axis=1)
            if np.any(gaps < (self.radii[i] + self.radii[i + 1:]) / 5):
                return False
        return True

    def uncovered(self, points: np.ndarray) -> np.ndarray:
        """Indices of the points lying in none of the balls."""
        covered = np.zeros(len(points), dtype=bool)
        tree = cKDTree(points)
        for center, radius in zip(self.centers, self.radii):
            covered[tree.query_ball_point(center, radius)] = True
        return np.flatnonzero(~covered)

    def covers(self, points: np.ndarray) -> bool:
        return len(self.uncovered(points)) == 0

    def plane_frames(self) -> np.ndarray:
        return np.stack([plane.frame for plane in self.planes])

    def components(self) -> int:
        """Connected components of the ball overlap graph."""
        return count_components(cover_overlap_graph(self.centers, self.radii))


def _fit_cover_plane(
    cloud: PointCloud,
    k: int,
    fit_mode: str,
    max_iter: int,
    job: Tuple[np.ndarray, float],
) -> Tuple[OrientedPlane, float, bool]:
    center, radius = job
    ball = Ball(center, radius)
    points = cloud.points_in(ball)
    degenerate = len(points) < k + 1
    if fit_mode == "pca" or degenerate:
        plane = pca_plane(points, k)
        value = make_objective("symmetric", points, ball).value(plane)
    else:
        try:
            plane, value = best_fit_plane(cloud, ball, k, "symmetric", max_iter=max_iter)
        except DegenerateFitError as error:
            plane, degenerate = error.plane, True
            value = make_objective("symmetric", points, ball).value(plane)
    return plane, value / radius, degenerate


def vitali_cover(
    cloud: PointCloud,
    scale_fn: ScaleFunction,
    k: Optional[int] = None,
    fit_mode: str = "symmetric",
    workers: int = 1,
    max_iter: int = FIT_MAX_ITER,
) -> VitaliCover:
    """
    Greedy Vitali cover of cloud ∩ B_{1+eps} at the scales of `scale_fn`.

    Candidates are visited by decreasing radius (ties by cloud index); a
    candidate y is accepted when B_{r_y/5}(y) misses every accepted fifth
    ball. A rejected y is within (r_y + r_z)/5 <= r_z of an accepted z, so
    the full balls cover every candidate.

    Parameters:
        cloud: The sample set.
        scale_fn: Radius per center.
        k: Plane dimension, the cloud's by default.
        fit_mode: "symmetric" runs the best-fit search, "pca" uses the
            least-squares plane.
        workers: Pool width for the plane fits.
        max_iter: Nelder-Mead iteration cap.

    Returns:
        The cover, balls in acceptance order.
    """
    k = cloud.k if k is None else k
    if fit_mode not in FIT_MODES:
        raise ContractViolationError(f"unknown fit mode {fit_mode!r}")
    if cloud.resolution > scale_fn.r / COVER_RESOLUTION_FACTOR:
        raise ResolutionError(
            f"resolution {cloud.resolution:.4g} is coarser than r/10 at r={scale_fn.r:.4g}",
            {"resolution": cloud.resolution, "scale": scale_fn.r},
        )

    norms = np.linalg.norm(cloud.points, axis=1)
    candidates = np.flatnonzero(norms <= 1 + scale_fn.epsilon)
    if len(candidates) == 0:
        raise ContractViolationError("the cloud has no points in B_{1+eps}")

    points = cloud.points[candidates]
    radii = scale_fn(norms[candidates])
    radii = np.atleast_1d(radii)
    reach = float(radii.max())
    tree = cKDTree(points)
    accepted = np.zeros(len(candidates), dtype=bool)
    chosen: List[int] = []

    for pos in np.lexsort((candidates, -radii)):
        neighbours = np.asarray(
            tree.query_ball_point(points[pos], (radii[pos] + reach) / 5), dtype=int
        )
        neighbours = neighbours[accepted[neighbours]]
        if neighbours.size:
            gaps = np.linalg.norm(points[neighbours] - points[pos], axis=1)
            if np.any(gaps < (radii[neighbours] + radii[pos]) / 5):
                continue
        accepted[pos] = True
        chosen.append(int(pos))

    order = np.array(chosen, dtype=int)
    jobs = [(points[pos], float(radii[pos])) for pos in order]
    fits = parallel_map(partial(_fit_cover_plane, cloud, k, fit_mode, max_iter), jobs, workers)

    logger.debug("Vitali cover at r=%.4g: %d balls", scale_fn.r, len(order))
    return VitaliCover(
        centers=points[order],
        center_indices=candidates[order],
        radii=radii[order],
        planes=[fit[0] for fit in fits],
        thetas=np.array([fit[1] for fit in fits]),
        degenerate=np.array([fit[2] for fit in fits], dtype=bool),
        fit_mode=fit_mode,
    )


@dataclass(frozen=True, eq=False)
class ParamSurface:
    """
    A map F from a regular grid on the base plane into R^n.

    Attributes:
        base_plane: The plane carrying the grid; grid coordinates are
            frame coordinates relative to its base point.
        spacing: Grid spacing g.
        count: Nodes per axis (odd, centered at the base point).
        positions: Node images in row-major grid order, shape (count^k, n).
    """

    base_plane: OrientedPlane
    spacing: float
    count: int
    positions: np.ndarray

    def __post_init__(self):
        positions = np.array(self.positions, dtype=float)
        if positions.shape != (self.count**self.k, self.n):
            raise ContractViolationError(
                f"expected {self.count ** self.k} node images in R^{self.n}"
            )
        positions.flags.writeable = False
        object.__setattr__(self, "positions", positions)

    @classmethod
    def flat(cls, base_plane: OrientedPlane, spacing: float, count: int) -> "ParamSurface":
        """The base-plane embedding of the grid."""
        axis = spacing * (np.arange(count) - (count - 1) // 2)
        mesh = np.meshgrid(*([axis] * base_plane.k), indexing="ij")
        coords = np.stack(mesh, axis=-1).reshape(-1, base_plane.k)
        return cls(base_plane, spacing, count, base_plane.embed(coords))

    @property
    def k(self) -> int:
        return self.base_plane.k

    @property
    def n(self) -> int:
        return self.base_plane.n

    @property
    def shape(self) -> Tuple[int, ...]:
        return (self.count,) * self.k

    @property
    def cell_shape(self) -> Tuple[int, ...]:
        return (self.count - 1,) * self.k

    @cached_property
    def grid_coordinates(self) -> np.ndarray:
        axis = self.spacing * (np.arange(self.count) - (self.count - 1) // 2)
        mesh = np.meshgrid(*([axis] * self.k), indexing="ij")
        return np.stack(mesh, axis=-1).reshape(-1, self.k)

    @cached_property
    def base_positions(self) -> np.ndarray:
        return self.base_plane.embed(self.grid_coordinates)

    @cached_property
    def base_radii(self) -> np.ndarray:
        return np.linalg.norm(self.grid_coordinates, axis=1)

    def with_positions(self, positions: np.ndarray) -> "ParamSurface":
        return ParamSurface(self.base_plane, self.spacing, self.count, positions)

    def outside_mask(self, epsilon: float) -> np.ndarray:
        """Nodes whose base point lies outside the closed ball B_{1+eps}."""
        return self.base_radii > 1 + epsilon

    def _slice(self, axis: int, part: slice) -> Tuple[slice, ...]:
        return (slice(None),) * axis + (part,)

    def cell_corners(self, values: np.ndarray) -> np.ndarray:
        """
        Node values at the 2^k corners of every cell.

        Parameters:
            values: Per-node values, shape (count^k, d).

        Returns:
            Array of shape (cells, 2^k, d), cells in row-major order.
        """
        grid = np.asarray(values).reshape(self.shape + (-1,))
        corners = []
        for offset in itertools.product((0, 1), repeat=self.k):
            index = tuple(slice(o, self.count - 1 + o) for o in offset)
            corners.append(grid[index].reshape(-1, grid.shape[-1]))
        return np.stack(corners, axis=1)

    def cell_centers(self) -> np.ndarray:
        """Average of the corner images of every cell."""
        return self.cell_corners(self.positions).mean(axis=1)

    def cell_base_coordinates(self) -> np.ndarray:
        return self.cell_corners(self.grid_coordinates).mean(axis=1)

    def cell_jacobians(self) -> np.ndarray:
        """
        Finite-difference differential of every cell.

        Row a is the difference along grid axis a divided by g, averaged
        over the 2^(k-1) cell edges parallel to that axis.

        Returns:
            Array of shape (cells, k, n).
        """
        grid = self.positions.reshape(self.shape + (self.n,))
        rows = []
        for a in range(self.k):
            diff = np.diff(grid, axis=a) / self.spacing
            for b in range(self.k):
                if b != a:
                    diff = 0.5 * (
                        diff[self._slice(b, slice(None, -1))]
                        + diff[self._slice(b, slice(1, None))]
                    )
            rows.append(diff.reshape(-1, self.n))
        return np.stack(rows, axis=1)

    def cell_frames(self) -> np.ndarray:
        """Orthonormalized cell differentials, grid orientation kept."""
        return orthonormalize_rows(self.cell_jacobians())

    def cell_volumes(self) -> np.ndarray:
        """sqrt(det(J J^T)) g^k per cell."""
        jac = self.cell_jacobians()
        gram = np.einsum("cin,cjn->cij", jac, jac)
        return np.sqrt(np.clip(np.linalg.det(gram), 0.0, None)) * self.spacing**self.k


def grid_layout(
    extent: float,
    spacing: float,
    k: int,
    max_nodes: int = MAX_GRID_NODES,
) -> Tuple[float, int]:
    """
    Spacing and node count of a grid covering [-extent, extent]^k.

    The spacing is enlarged when the grid would exceed `max_nodes`.

    Returns:
        The spacing and the (odd) number of nodes per axis.
    """
    half = max(1, math.ceil(extent / spacing - 1e-9))
    max_half = max(1, (int(max_nodes ** (1.0 / k)) - 1) // 2)
    if half > max_half:
        logger.info(
            "grid spacing raised from %.4g to %.4g to stay under %d nodes",
            spacing,
            extent / max_half,
            max_nodes,
        )
        half = max_half
        spacing = extent / half
    return spacing, 2 * half + 1


def taper(base_radii: np.ndarray, epsilon: float) -> np.ndarray:
    """Smoothstep cutoff: 1 on B_1, 0 outside B_{1+eps}."""
    s = np.clip((base_radii - 1.0) / epsilon, 0.0, 1.0)
    return 1.0 - s * s * (3.0 - 2.0 * s)


def _glue_chunk(
    centers: np.ndarray,
    radii: np.ndarray,
    bases: np.ndarray,
    frames: np.ndarray,
    blend: float,
    points: np.ndarray,
) -> np.ndarray:
    """
    Normalized partition-of-unity displacement of some nodes.

    Each node sums its contributions in ball index order, so the result
    does not depend on how nodes are split into chunks.
    """
    displacement = np.zeros_like(points)
    if len(points) == 0:
        return displacement
    tree = cKDTree(points)
    weight = np.zeros(len(points))
    total = np.zeros_like(points)
    for center, radius, base, frame in zip(centers, radii, bases, frames):
        support = blend * radius
        idx = np.asarray(tree.query_ball_point(center, support, return_sorted=True), dtype=int)
        if idx.size == 0:
            continue
        near = points[idx]
        phi = np.clip(1.0 - np.sum((near - center) ** 2, axis=1) / support**2, 0.0, None) ** 2
        offsets = near - base
        projected = base + (offsets @ frame.T) @ frame
        weight[idx] += phi
        total[idx] += phi[:, None] * (projected - near)
    active = weight > 0
    displacement[active] = total[active] / weight[active][:, None]
    return displacement


def check_gluing(surface: ParamSurface, cover: VitaliCover):
    """
    Require every cover plane to be within Grassmann distance 1/2 of the
    surface cells inside its ball.
    """
    cell_centers = surface.cell_centers()
    frames = surface.cell_frames()
    tree = cKDTree(cell_centers)
    for index, (center, radius, plane) in enumerate(
        zip(cover.centers, cover.radii, cover.planes)
    ):
        cells = np.asarray(tree.query_ball_point(center, radius), dtype=int)
        if cells.size == 0:
            continue
        worst = float(grassmann_distances(frames[cells], plane.frame).max())
        if worst > GLUE_MAX_GRASSMANN:
            raise GluingError(
                f"cover plane {index} is at Grassmann distance {worst:.3f} from the surface",
                index,
                worst,
            )


def glue_step(
    surface: ParamSurface,
    cover: VitaliCover,
    epsilon: float,
    blend: float = BLEND_FACTOR,
    workers: int = 1,
) -> ParamSurface:
    """
    Glue a surface onto the planes of a cover.

    F'(u) = F(u) + tau(u) sum_i phi_i(F(u)) (pi_{L_i}(F(u)) - F(u)), with
    phi_i proportional to max(0, 1 - |x - y_i|^2 / (blend r_i)^2)^2 and
    normalized to sum to one where any bump is active, and tau the
    smoothstep taper in the base radius. Nodes outside B_{1+eps} get the
    base embedding exactly.

    Parameters:
        surface: The previous level.
        cover: This level's cover.
        epsilon: Outer scale.
        blend: Bump support factor.
        workers: Pool width over node chunks.

    Returns:
        The glued surface.
    """
    check_gluing(surface, cover)

    inside = np.flatnonzero(~surface.outside_mask(epsilon))
    chunk_count = max(1, workers * CHUNKS_PER_WORKER) if workers > 1 else 1
    chunks = np.array_split(inside, chunk_count)
    job = partial(
        _glue_chunk,
        cover.centers,
        cover.radii,
        np.stack([plane.base for plane in cover.planes]),
        cover.plane_frames(),
        blend,
    )
    parts = parallel_map(job, [surface.positions[chunk] for chunk in chunks], workers)
    displacement = np.concatenate(parts) if parts else np.zeros((0, surface.n))

    positions = surface.base_positions.copy()
    weights = taper(surface.base_radii[inside], epsilon)
    positions[inside] = surface.positions[inside] + weights[:, None] * displacement
    return surface.with_positions(positions)


def partition_weights(
    points: np.ndarray,
    centers: np.ndarray,
    radii: np.ndarray,
    blend: float = BLEND_FACTOR,
) -> np.ndarray:
    """
    Dense normalized bump weights, shape (points, balls); rows without an
    active bump are zero.
    """
    gaps = np.linalg.norm(points[:, None, :] - centers[None, :, :], axis=-1)
    support = blend * radii[None, :]
    phi = np.clip(1.0 - gaps**2 / support**2, 0.0, None) ** 2
    totals = phi.sum(axis=1, keepdims=True)
    return np.divide(phi, totals, out=np.zeros_like(phi), where=totals > 0)


@dataclass
class SurfaceFamily:
    """
    Surfaces S_{r_a}, coarsest first, with the cover of every level.

    Attributes:
        radii: r_a = eps 2^-a for the built levels.
        surfaces: One surface per level; level 0 is the base plane.
        covers: One cover per level.
        epsilon: Outer scale.
        aborted: Whether gluing failed before the last requested level.
        diagnostic: Error details when aborted.
    """

    radii: List[float]
    surfaces: List[ParamSurface]
    covers: List[VitaliCover]
    epsilon: float
    aborted: bool = False
    diagnostic: Optional[Dict[str, Any]] = None

    @property
    def base_plane(self) -> OrientedPlane:
        return self.surfaces[0].base_plane

    @property
    def final(self) -> ParamSurface:
        return self.surfaces[-1]

    def at(self, r: float) -> ParamSurface:
        """
        S_r for any r, interpolating positions linearly between the two
        neighbouring dyadic levels.
        """
        if r >= self.radii[0]:
            return self.surfaces[0]
        if r <= self.radii[-1]:
            return self.surfaces[-1]
        for a in range(len(self.radii) - 1):
            upper, lower = self.radii[a], self.radii[a + 1]
            if lower <= r <= upper:
                t = (upper - r) / (upper - lower)
                start = self.surfaces[a].positions
                end = self.surfaces[a + 1].positions
                return self.surfaces[a].with_positions(start + t * (end - start))
        raise ContractViolationError(f"scale {r} not bracketed by the levels")


class ReifenbergBuilder:
    def __init__(
        self,
        cloud: PointCloud,
        epsilon: float,
        levels: int,
        field: CalibrationField = None,
        k: int = None,
        fit_mode: str = "symmetric",
        grid_spacing: float = None,
        max_grid_nodes: int = MAX_GRID_NODES,
        blend: float = BLEND_FACTOR,
        workers: int = 1,
        state_path: str = None,
        max_iter: int = FIT_MAX_ITER,
    ):
        """
        Initialize the builder with the cloud and construction parameters.

        Parameters:
            cloud: The sample set, inside B_2(0).
            epsilon: Outer scale; level a lives at r_a = epsilon 2^-a.
            levels: Index A of the last level.
            field: Orients the base plane so its constant part is positive.
            k: Surface dimension, the cloud's by default.
            fit_mode: How cover planes are fitted, "symmetric" or "pca".
            grid_spacing: Grid spacing, r_A / 8 by default.
            max_grid_nodes: Cap on the grid size.
            blend: Bump support factor.
            workers: Pool width for fits and gluing.
            state_path: JSON Lines file receiving the state of every level.
            max_iter: Nelder-Mead iteration cap of the plane fits.
        """
        if epsilon <= 0 or levels < 0:
            raise ContractViolationError("need epsilon > 0 and levels >= 0")
        self.cloud = cloud
        self.epsilon = epsilon
        self.levels = levels
        self.field = field
        self.k = cloud.k if k is None else k
        self.fit_mode = fit_mode
        self.max_grid_nodes = max_grid_nodes
        self.blend = blend
        self.workers = workers
        self.state_path = state_path
        self.max_iter = max_iter
        self.radii = [epsilon * 2.0**-a for a in range(levels + 1)]

        requested = grid_spacing if grid_spacing is not None else self.radii[-1] / GRID_DIVISIONS
        self.spacing, self.count = grid_layout(
            1 + 2 * epsilon, requested, self.k, max_grid_nodes
        )

    def base_plane(self) -> OrientedPlane:
        """
        The plane L_{0,eps} fitted in B_eps(0), based at the foot of the
        origin and oriented by the field's constant part.
        """
        origin = np.zeros(self.cloud.n)
        plane, _, _ = _fit_cover_plane(
            self.cloud, self.k, self.fit_mode, self.max_iter, (origin, self.epsilon)
        )
        plane = OrientedPlane(project(plane, origin), plane.frame)
        if self.field is not None and evaluate(self.field.constant, plane) < 0:
            plane = plane.flipped()
        return plane

    def run(self) -> SurfaceFamily:
        """
        Build the levels in order; a gluing failure stops the construction
        and returns the levels built so far, flagged as aborted.

        Returns:
            The family.
        """
        started = time.perf_counter()
        if self.state_path:
            reset_state_file(self.state_path)

        surfaces = [ParamSurface.flat(self.base_plane(), self.spacing, self.count)]
        covers: List[VitaliCover] = []
        aborted, diagnostic = False, None

        for level, radius in enumerate(self.radii):
            cover = vitali_cover(
                self.cloud,
                ScaleFunction(radius, self.epsilon),
                self.k,
                self.fit_mode,
                self.workers,
                self.max_iter,
            )
            moved = 0.0
            if level > 0:
                try:
                    glued = glue_step(surfaces[-1], cover, self.epsilon, self.blend, self.workers)
                except GluingError as error:
                    logger.error("level %d aborted: %s", level, error)
                    aborted, diagnostic = True, error.diagnostic()
                    self._save(level, radius, cover, moved, aborted, diagnostic)
                    break
                moved = float(
                    np.linalg.norm(glued.positions - surfaces[-1].positions, axis=1).max()
                )
                surfaces.append(glued)
            covers.append(cover)
            self._save(level, radius, cover, moved, False, None)
            logger.info(
                "level %d (r=%.4g): %d balls, max displacement %.4g",
                level,
                radius,
                len(cover),
                moved,
            )

        logger.info(
            "built %d levels in %.1fs", len(surfaces), time.perf_counter() - started
        )
        return SurfaceFamily(
            radii=self.radii[: len(surfaces)],
            surfaces=surfaces,
            covers=covers,
            epsilon=self.epsilon,
            aborted=aborted,
            diagnostic=diagnostic,
        )

    def _save(
        self,
        level: int,
        radius: float,
        cover: VitaliCover,
        moved: float,
        aborted: bool,
        diagnostic: Optional[Dict[str, Any]],
    ):
        if not self.state_path:
            return
        save_level_state(
            level=level,
            radius=radius,
            cover_size=len(cover),
            grid_nodes=self.count**self.k,
            max_displacement=moved,
            aborted=aborted,
            filepath=self.state_path,
            diagnostic=diagnostic,
        )


def build_family(
    cloud: PointCloud,
    epsilon: float,
    levels: int,
    field: CalibrationField = None,
    **options: Any,
) -> SurfaceFamily:
    """
    Build S_{r_a} for r_a = eps 2^-a, a = 0..levels.

    Parameters:
        cloud: The sample set.
        epsilon: Outer scale.
        levels: Last level index.
        field: Calibration field orienting the base plane.
        **options: Further ReifenbergBuilder parameters.

    Returns:
        The family, flagged when gluing aborted.
    """
    return ReifenbergBuilder(cloud, epsilon, levels, field, **options).run()


@dataclass
class LevelReport:
    """Property measurements of one level; None where not applicable."""

    level: int
    radius: float
    hausdorff: Optional[float]
    hausdorff_ratio: Optional[float]
    grassmann_drift: Optional[float]
    plane_disagreements: int
    positivity_min: Optional[float]
    positivity_fraction: Optional[float]
    velocity: Optional[float]
    curvature_proxy: float
    injectivity_violations: int
    outside_exact: bool
    cover_size: int
    cover_components: int
    fifth_balls_disjoint: bool
    covers_cloud: bool

    def to_json(self) -> Dict[str, Any]:
        return dict(self.__dict__)


@dataclass
class FamilyReport:
    """
    Property checks of a surface family against a flatness level delta.

    Attributes:
        levels: Per-level measurements.
        delta: Flatness level the ratios are taken against.
        epsilon: Outer scale.
        positivity_threshold: eps / 2.
        constants: Largest ratio over levels per quantity (None if delta = 0
            and the quantity is not zero).
        stable: Whether each ratio stays within a factor 2 across levels.
        monotone_refinement: Whether the Hausdorff distance never grows by
            more than a factor 2 (plus one grid step) from level to level.
        aborted: Copied from the family.
    """

    levels: List[LevelReport]
    delta: float
    epsilon: float
    positivity_threshold: float
    constants: Dict[str, Optional[float]]
    stable: Dict[str, bool]
    monotone_refinement: bool
    aborted: bool

    def ratios(self, quantity: str) -> List[Optional[float]]:
        """Per-level values of a quantity divided by delta."""
        return [_ratio(getattr(level, quantity), self.delta) for level in self.levels]

    def positivity_ok(self) -> bool:
        return all(
            level.positivity_min is None or level.positivity_min > self.positivity_threshold
            for level in self.levels
        )

    def to_json(self) -> Dict[str, Any]:
        return {
            "levels": [level.to_json() for level in self.levels],
            "delta": self.delta,
            "epsilon": self.epsilon,
            "positivity_threshold": self.positivity_threshold,
            "constants": self.constants,
            "stable": self.stable,
            "monotone_refinement": self.monotone_refinement,
            "aborted": self.aborted,
        }


def _ratio(value: Optional[float], delta: float) -> Optional[float]:
    if value is None:
        return None
    if delta > 0:
        return float(value / delta)
    return 0.0 if value <= ZERO_TOL else None


def _stable(values: Sequence[Optional[float]]) -> bool:
    present = [v for v in values if v is not None]
    if not present:
        return True
    high, low = max(present), min(present)
    return high <= STABILITY_FACTOR * low or high <= ZERO_TOL


def _drift(
    surface: ParamSurface,
    cover: VitaliCover,
    cells: np.ndarray,
) -> Tuple[Optional[float], int]:
    """Worst Grassmann distance from cells to cover planes within r, and
    the number of cells whose candidate planes disagree."""
    frames = surface.cell_frames()[cells]
    tree = cKDTree(surface.cell_centers()[cells])
    worst = np.full(len(cells), -1.0)
    best = np.full(len(cells), np.inf)
    for center, radius, plane in zip(cover.centers, cover.radii, cover.planes):
        near = np.asarray(tree.query_ball_point(center, radius), dtype=int)
        if near.size == 0:
            continue
        values = grassmann_distances(frames[near], plane.frame)
        worst[near] = np.maximum(worst[near], values)
        best[near] = np.minimum(best[near], values)
    seen = worst >= 0
    if not np.any(seen):
        return None, 0
    disagreements = int(np.sum(worst[seen] - best[seen] > PLANE_DISAGREEMENT))
    return float(worst[seen].max()), disagreements


def _curvature_proxy(surface: ParamSurface, cells: np.ndarray, r: float) -> float:
    """Largest Grassmann distance between frames of adjacent cells, times r / g."""
    flat_frames = surface.cell_frames()
    frames = flat_frames.reshape(surface.cell_shape + (surface.k, surface.n))
    selected = np.zeros(len(flat_frames), dtype=bool)
    selected[cells] = True
    selected = selected.reshape(surface.cell_shape)
    worst = 0.0
    for axis in range(surface.k):
        lo = surface._slice(axis, slice(None, -1))
        hi = surface._slice(axis, slice(1, None))
        both = (selected[lo] & selected[hi]).reshape(-1)
        if not np.any(both):
            continue
        first = frames[lo].reshape(-1, surface.k, surface.n)[both]
        second = frames[hi].reshape(-1, surface.k, surface.n)[both]
        proj_first = np.einsum("mki,mkj->mij", first, first)
        proj_second = np.einsum("mki,mkj->mij", second, second)
        gaps = np.linalg.norm(proj_first - proj_second, ord=2, axis=(-2, -1))
        worst = max(worst, float(gaps.max()))
    return worst * r / surface.spacing


def check_level(
    family: SurfaceFamily,
    level: int,
    cloud: PointCloud,
    field: Optional[CalibrationField] = None,
) -> LevelReport:
    """Measure the properties of one level of a family."""
    surface = family.surfaces[level]
    cover = family.covers[level]
    radius = family.radii[level]
    epsilon = family.epsilon

    nodes_in_unit = np.flatnonzero(np.linalg.norm(surface.positions, axis=1) <= 1.0)
    cloud_in_unit = cloud.points[np.linalg.norm(cloud.points, axis=1) <= 1.0]
    hausdorff = None
    if len(nodes_in_unit) and len(cloud_in_unit):
        hausdorff = hausdorff_distance(surface.positions[nodes_in_unit], cloud_in_unit)

    cell_centers = surface.cell_centers()
    unit_cells = np.flatnonzero(np.linalg.norm(cell_centers, axis=1) <= 1.0)
    drift, disagreements = _drift(surface, cover, unit_cells)

    positivity_min, positivity_fraction = None, None
    if field is not None:
        region = np.linalg.norm(surface.cell_base_coordinates(), axis=1) <= 1 + epsilon
        values = field.constant.evaluate_frames(surface.cell_frames()[region])
        positivity_min = float(values.min())
        positivity_fraction = float(np.mean(values > epsilon / 2))

    velocity = None
    if level > 0:
        moved = np.linalg.norm(surface.positions - family.surfaces[level - 1].positions, axis=1)
        velocity = float(moved.max() / (family.radii[level - 1] - radius))

    injective = close_nonadjacent_pairs(
        surface.positions[nodes_in_unit],
        nodes_in_unit,
        surface.shape,
        INJECTIVITY_FRACTION * surface.spacing,
    ) if len(nodes_in_unit) > 1 else set()

    outside = surface.outside_mask(epsilon)
    cloud_region = cloud.points[np.linalg.norm(cloud.points, axis=1) <= 1 + epsilon]

    return LevelReport(
        level=level,
        radius=radius,
        hausdorff=hausdorff,
        hausdorff_ratio=None if hausdorff is None else hausdorff / radius,
        grassmann_drift=drift,
        plane_disagreements=disagreements,
        positivity_min=positivity_min,
        positivity_fraction=positivity_fraction,
        velocity=velocity,
        curvature_proxy=_curvature_proxy(surface, unit_cells, radius),
        injectivity_violations=len(injective),
        outside_exact=bool(
            np.array_equal(surface.positions[outside], surface.base_positions[outside])
        ),
        cover_size=len(cover),
        cover_components=cover.components(),
        fifth_balls_disjoint=cover.fifth_balls_disjoint(),
        covers_cloud=cover.covers(cloud_region),
    )


def check_properties(
    family: SurfaceFamily,
    cloud: PointCloud,
    field: Optional[CalibrationField] = None,
    delta: Optional[float] = None,
) -> FamilyReport:
    """
    Measure the construction properties of every level.

    Parameters:
        family: The built family.
        cloud: The sample set it was built from.
        field: Calibration field for the orientation positivity check.
        delta: Flatness level; the largest cover-plane flatness by default.

    Returns:
        The report. Findings are entries, nothing is raised.
    """
    if not family.surfaces:
        raise ContractViolationError("empty family")
    if delta is None:
        delta = float(max(cover.thetas.max() for cover in family.covers))

    levels = [check_level(family, a, cloud, field) for a in range(len(family.surfaces))]

    constants: Dict[str, Optional[float]] = {}
    stable: Dict[str, bool] = {}
    for quantity in ("hausdorff_ratio", "grassmann_drift", "velocity"):
        ratios = [_ratio(getattr(level, quantity), delta) for level in levels]
        if quantity == "velocity":
            ratios = ratios[1:]
        present = [r for r in ratios if r is not None]
        constants[quantity] = max(present) if present else None
        stable[quantity] = _stable(ratios)

    grid_step = family.surfaces[0].spacing
    monotone = all(
        later.hausdorff is None
        or earlier.hausdorff is None
        or later.hausdorff <= STABILITY_FACTOR * earlier.hausdorff + grid_step
        for earlier, later in zip(levels[:-1], levels[1:])
    )

    return FamilyReport(
        levels=levels,
        delta=delta,
        epsilon=family.epsilon,
        positivity_threshold=family.epsilon / 2,
        constants=constants,
        stable=stable,
        monotone_refinement=monotone,
        aborted=family.aborted,
    )
