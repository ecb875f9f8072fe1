"""
This module contains the ground-truth sample sets used to exercise the
certifier: planes, graphs of linear and quadratic maps, a holomorphic
curve in C^2, coordinate planes calibrated by a standard form, Koch-type
curves with a tunable bump height, and noisy copies of any of these.

Every generator returns the cloud together with what is known about the
underlying set: tangent frames per point, the smallest calibration value
it should show, and closed-form measures where they exist.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from .errors import ContractViolationError
from .exterior_algebra import OrientedPlane, orthonormalize_rows
from .geometry_core import PointCloud
from .measure_calibration import unit_ball_volume
from .standard_forms import form_by_name

logger = logging.getLogger(__name__)

KINDS = ("plane", "graph", "complex_curve", "calibrated_plane", "koch", "perturbed")
SCHEDULES = ("constant", "decay")
# The Koch base segment runs from (-1.5, 0) to (1.5, 0)
KOCH_HALF_LENGTH = 1.5


@dataclass
class GeneratorSpec:
    """
    Description of a generated sample set.

    Attributes:
        kind: One of KINDS.
        h: Target resolution; the emitted cloud is an h-net.
        n: Ambient dimension (plane and graph kinds).
        k: Intrinsic dimension (plane and graph kinds).
        extent: Radius of the parameter disk.
        domain_radius: Points outside B_R(0) are dropped.
        matrix: Linear part A of a graph, shape (n - k, k).
        curvature: Coefficient c of the quadratic term c |u|^2 e_{k+1}.
        coefficient: c of the complex curve {(z, c z^2)}.
        form: Standard form name of a calibrated plane.
        form_params: Its constructor arguments.
        monomial: 1-based coordinate axes of the calibrated plane.
        eta: Koch bump height, relative to the replaced segment.
        schedule: "constant" uses eta at every generation, "decay" uses
            2^-j at generation j.
        depth: Number of Koch generations.
        base: Spec of the set a perturbed cloud is built from.
        noise: Largest normal displacement of a perturbed point.
        seed: Seed of the perturbation.
    """

    kind: str
    h: float = 0.02
    n: int = 3
    k: int = 2
    extent: float = 2.0
    domain_radius: float = 2.0
    matrix: Optional[List[List[float]]] = None
    curvature: float = 0.0
    coefficient: float = 0.1
    form: Optional[str] = None
    form_params: Dict[str, Any] = field(default_factory=dict)
    monomial: Optional[List[int]] = None
    eta: float = 0.5
    schedule: str = "constant"
    depth: int = 4
    base: Optional["GeneratorSpec"] = None
    noise: float = 0.0
    seed: int = 0

    def validate(self):
        if self.kind not in KINDS:
            raise ContractViolationError(f"unknown generator kind {self.kind!r}")
        if self.h <= 0 or self.extent <= 0 or self.domain_radius <= 0:
            raise ContractViolationError("h, extent and domain radius must be positive")
        if self.kind in ("plane", "graph") and not 1 <= self.k <= self.n:
            raise ContractViolationError(f"cannot place a {self.k}-plane in R^{self.n}")
        if self.kind == "graph":
            if self.k == self.n:
                raise ContractViolationError("a graph needs at least one normal direction")
            if self.matrix is not None and np.shape(self.matrix) != (self.n - self.k, self.k):
                raise ContractViolationError(
                    f"graph matrix must have shape ({self.n - self.k}, {self.k})"
                )
        if self.kind == "calibrated_plane" and (self.form is None or self.monomial is None):
            raise ContractViolationError("a calibrated plane needs a form and a monomial")
        if self.kind == "koch":
            if self.schedule not in SCHEDULES:
                raise ContractViolationError(f"unknown eta schedule {self.schedule!r}")
            if self.depth < 0 or self.eta < 0:
                raise ContractViolationError("Koch depth and eta must be nonnegative")
        if self.kind == "perturbed":
            if self.base is None or self.base.kind == "perturbed":
                raise ContractViolationError("perturbed needs a non-perturbed base spec")
            if self.noise < 0:
                raise ContractViolationError("noise must be nonnegative")
            self.base.validate()

    def to_dict(self) -> Dict[str, Any]:
        data = dict(self.__dict__)
        data["base"] = None if self.base is None else self.base.to_dict()
        return data

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "GeneratorSpec":
        values = dict(data)
        unknown = set(values) - set(cls.__dataclass_fields__)
        if unknown:
            raise ContractViolationError(f"unknown generator keys: {sorted(unknown)}")
        if values.get("base") is not None:
            values["base"] = cls.from_dict(values["base"])
        return cls(**values)


@dataclass
class GroundTruth:
    """
    What is known about a generated set.

    Attributes:
        tangent_frames: Orthonormal oriented tangent frame per point,
            shape (m, k, n).
        predicted_min_calibration: Smallest value the calibrating form
            takes on the true tangent planes.
        measure: H^k of the set inside B_1(0), when known in closed form.
        gradient_bound: Largest sampled operator norm of the graph
            differential.
        koch_factors: Length factor of every Koch generation.
        koch_length: Exact length of the Koch polyline.
        noise: Perturbation bound; the Hausdorff distance to the base set
            is at most this.
    """

    tangent_frames: Optional[np.ndarray] = None
    predicted_min_calibration: Optional[float] = None
    measure: Optional[float] = None
    gradient_bound: Optional[float] = None
    koch_factors: Optional[List[float]] = None
    koch_length: Optional[float] = None
    noise: Optional[float] = None

    def to_json(self) -> Dict[str, Any]:
        """Metadata without the per-point frames."""
        return {
            "predicted_min_calibration": self.predicted_min_calibration,
            "measure": self.measure,
            "gradient_bound": self.gradient_bound,
            "koch_factors": self.koch_factors,
            "koch_length": self.koch_length,
            "noise": self.noise,
        }


def disk_grid(k: int, radius: float, spacing: float) -> np.ndarray:
    """Points of the regular grid of given spacing inside the closed k-disk."""
    half = int(math.ceil(radius / spacing))
    axis = spacing * np.arange(-half, half + 1)
    mesh = np.meshgrid(*([axis] * k), indexing="ij")
    points = np.stack(mesh, axis=-1).reshape(-1, k)
    return points[np.linalg.norm(points, axis=1) <= radius + 1e-12]


def _graph_matrix(spec: GeneratorSpec) -> np.ndarray:
    if spec.matrix is None:
        return np.zeros((spec.n - spec.k, spec.k))
    return np.asarray(spec.matrix, dtype=float)


def graph_differentials(spec: GeneratorSpec, u: np.ndarray) -> np.ndarray:
    """
    Differential of f(u) = A u + c |u|^2 e_1 at every parameter point.

    Returns:
        Array of shape (m, n - k, k).
    """
    differentials = np.repeat(_graph_matrix(spec)[None], len(u), axis=0)
    differentials[:, 0, :] += 2.0 * spec.curvature * u
    return differentials


def _graph_values(spec: GeneratorSpec, u: np.ndarray) -> np.ndarray:
    values = u @ _graph_matrix(spec).T
    values[:, 0] += spec.curvature * np.sum(u * u, axis=1)
    return values


def graph_gradient_bound(
    spec: GeneratorSpec,
    radius: Optional[float] = None,
) -> Tuple[float, float]:
    """
    Sampled gradient bound of a graph and the calibration value it predicts.

    A graph plane with differential A carries the volume-form value
    1 / sqrt(det(I + A^T A)); the prediction is the smallest such value
    over the sampled parameters.

    Parameters:
        spec: A plane, graph or perturbed graph spec.
        radius: Radius of the sampled parameter disk, spec.extent by default.

    Returns:
        The largest operator norm of Df and the predicted minimal value.
    """
    if spec.kind == "perturbed" and spec.base is not None:
        return graph_gradient_bound(spec.base, radius)
    if spec.kind == "plane":
        return 0.0, 1.0
    if spec.kind != "graph":
        raise ContractViolationError(f"{spec.kind} is not a graph")
    u = disk_grid(spec.k, spec.extent if radius is None else radius, spec.h)
    differentials = graph_differentials(spec, u)
    norms = np.linalg.norm(differentials, ord=2, axis=(1, 2))
    gram = np.eye(spec.k) + np.einsum("mik,mil->mkl", differentials, differentials)
    predicted = 1.0 / np.sqrt(np.linalg.det(gram))
    return float(norms.max()), float(predicted.min())


def koch_step(vertices: np.ndarray, eta: float) -> np.ndarray:
    """
    One Koch generation: the middle third of every segment is replaced by
    the two sides of an isosceles bump of height eta / 3 times the segment
    length, raised on the left of the segment.
    """
    start, end = vertices[:-1], vertices[1:]
    step = end - start
    left = np.stack([-step[:, 1], step[:, 0]], axis=1)
    first = start + step / 3
    tip = start + step / 2 + eta / 3 * left
    second = start + 2 * step / 3
    refined = np.stack([start, first, tip, second], axis=1).reshape(-1, 2)
    return np.vstack([refined, vertices[-1:]])


def polyline_length(vertices: np.ndarray) -> float:
    return float(np.sum(np.linalg.norm(np.diff(vertices, axis=0), axis=1)))


def koch_length_factor(eta: float) -> float:
    """Length ratio of one Koch generation, measured on the unit segment."""
    return polyline_length(koch_step(np.array([[0.0, 0.0], [1.0, 0.0]]), eta))


def eta_schedule(spec: GeneratorSpec) -> List[float]:
    """Bump heights of generations 1..depth."""
    if spec.schedule == "decay":
        return [2.0**-j for j in range(1, spec.depth + 1)]
    return [spec.eta] * spec.depth


def koch_polyline(spec: GeneratorSpec) -> np.ndarray:
    vertices = np.array([[-KOCH_HALF_LENGTH, 0.0], [KOCH_HALF_LENGTH, 0.0]])
    for eta in eta_schedule(spec):
        vertices = koch_step(vertices, eta)
    return vertices


def sample_polyline(vertices: np.ndarray, spacing: float) -> Tuple[np.ndarray, np.ndarray]:
    """
    Points along a polyline no farther than `spacing` apart.

    Returns:
        The points and the unit direction of the segment each lies on.
    """
    steps = np.diff(vertices, axis=0)
    lengths = np.linalg.norm(steps, axis=1)
    counts = np.maximum(1, np.ceil(lengths / spacing).astype(int))
    segment = np.repeat(np.arange(len(steps)), counts)
    offsets = np.arange(len(segment)) - np.repeat(np.cumsum(counts) - counts, counts)
    t = offsets / counts[segment]
    points = vertices[segment] + t[:, None] * steps[segment]
    directions = steps[segment] / lengths[segment][:, None]
    points = np.vstack([points, vertices[-1:]])
    directions = np.vstack([directions, directions[-1:]])
    return points, directions


def _grid_spacing(h: float, lipschitz: float) -> float:
    return h / math.sqrt(1.0 + lipschitz**2)


def _plane(spec: GeneratorSpec) -> Tuple[np.ndarray, GroundTruth]:
    plane = OrientedPlane.coordinate(spec.n, range(1, spec.k + 1))
    points = plane.embed(disk_grid(spec.k, spec.extent, spec.h))
    frames = np.repeat(plane.frame[None], len(points), axis=0)
    measure = unit_ball_volume(spec.k) if spec.extent >= 1 else None
    return points, GroundTruth(frames, 1.0, measure, gradient_bound=0.0)


def _graph(spec: GeneratorSpec) -> Tuple[np.ndarray, GroundTruth]:
    lipschitz = float(np.linalg.norm(_graph_matrix(spec), ord=2)) + 2 * abs(
        spec.curvature
    ) * spec.extent
    u = disk_grid(spec.k, spec.extent, _grid_spacing(spec.h, lipschitz))
    points = np.hstack([u, _graph_values(spec, u)])
    differentials = graph_differentials(spec, u)
    jacobians = np.concatenate(
        [np.repeat(np.eye(spec.k)[None], len(u), axis=0), np.swapaxes(differentials, 1, 2)],
        axis=2,
    )
    bound, predicted = graph_gradient_bound(spec)
    linear = spec.curvature == 0 and spec.extent >= 1
    return points, GroundTruth(
        orthonormalize_rows(jacobians),
        predicted,
        unit_ball_volume(spec.k) if linear else None,
        gradient_bound=bound,
    )


def _complex_curve(spec: GeneratorSpec) -> Tuple[np.ndarray, GroundTruth]:
    c = spec.coefficient
    u = disk_grid(2, spec.extent, _grid_spacing(spec.h, 2 * abs(c) * spec.extent))
    z = u[:, 0] + 1j * u[:, 1]
    image = c * z * z
    slope = 2 * c * z
    points = np.stack([z.real, z.imag, image.real, image.imag], axis=1)
    # Tangent vectors v = (1, 2cz) and iv in interleaved coordinates
    zeros, ones = np.zeros(len(z)), np.ones(len(z))
    tangent = np.stack([ones, zeros, slope.real, slope.imag], axis=1)
    rotated = np.stack([zeros, ones, -slope.imag, slope.real], axis=1)
    frames = orthonormalize_rows(np.stack([tangent, rotated], axis=1))
    return points, GroundTruth(frames, 1.0)


def _calibrated_plane(spec: GeneratorSpec) -> Tuple[np.ndarray, GroundTruth]:
    form = form_by_name(spec.form, **spec.form_params)
    plane = OrientedPlane.coordinate(form.n, spec.monomial)
    value = form.evaluate_frame(plane.frame)
    if abs(value) == 0:
        raise ContractViolationError(
            f"{spec.form} vanishes on the coordinate plane {spec.monomial}"
        )
    if value < 0:
        plane = plane.flipped()
    points = plane.embed(disk_grid(form.k, spec.extent, spec.h))
    frames = np.repeat(plane.frame[None], len(points), axis=0)
    measure = unit_ball_volume(form.k) if spec.extent >= 1 else None
    return points, GroundTruth(frames, abs(value), measure)


def _koch(spec: GeneratorSpec) -> Tuple[np.ndarray, GroundTruth]:
    vertices = koch_polyline(spec)
    points, directions = sample_polyline(vertices, spec.h)
    factors = [koch_length_factor(eta) for eta in eta_schedule(spec)]
    return points, GroundTruth(
        tangent_frames=directions[:, None, :],
        predicted_min_calibration=None,
        koch_factors=factors,
        koch_length=polyline_length(vertices),
    )


def perturbation_base(spec: GeneratorSpec) -> GeneratorSpec:
    """
    The base spec a perturbed cloud is displaced from: finer by twice the
    noise and shrunk by the noise so displaced points stay in the domain.
    """
    base = GeneratorSpec.from_dict(spec.base.to_dict())
    base.h = max(spec.h - 2 * spec.noise, spec.h / 4)
    base.domain_radius = spec.domain_radius - spec.noise
    return base


def _perturbed(spec: GeneratorSpec) -> Tuple[np.ndarray, GroundTruth]:
    cloud, truth = generate(perturbation_base(spec))
    points = np.array(cloud.points)
    frames = truth.tangent_frames
    m, k, n = frames.shape
    if n > k and spec.noise > 0:
        rng = np.random.default_rng(spec.seed)
        _, _, vt = np.linalg.svd(frames, full_matrices=True)
        normals = vt[:, k:, :]
        directions = rng.standard_normal((m, n - k))
        directions /= np.linalg.norm(directions, axis=1, keepdims=True)
        magnitudes = spec.noise * rng.random(m)
        offsets = np.einsum("mj,mjn->mn", directions * magnitudes[:, None], normals)
        points = points + offsets
    truth.noise = spec.noise
    truth.measure = None
    return points, truth


GENERATORS = {
    "plane": _plane,
    "graph": _graph,
    "complex_curve": _complex_curve,
    "calibrated_plane": _calibrated_plane,
    "koch": _koch,
    "perturbed": _perturbed,
}


def intrinsic_dimension(spec: GeneratorSpec) -> int:
    if spec.kind == "perturbed":
        return intrinsic_dimension(spec.base)
    if spec.kind == "complex_curve":
        return 2
    if spec.kind == "koch":
        return 1
    if spec.kind == "calibrated_plane":
        return form_by_name(spec.form, **spec.form_params).k
    return spec.k


def generate(spec: GeneratorSpec) -> Tuple[PointCloud, GroundTruth]:
    """
    Generate the sample set a spec describes.

    Kinds with a fixed ambient space ignore n and k: complex curves live
    in C^2 = R^4, Koch curves in R^2, calibrated planes in the form's space.

    Parameters:
        spec: The description.

    Returns:
        The cloud (points outside the domain ball dropped) and its ground
        truth, tangent frames aligned with the cloud points.
    """
    spec.validate()
    points, truth = GENERATORS[spec.kind](spec)
    if spec.kind != "koch":
        keep = np.linalg.norm(points, axis=1) <= spec.domain_radius
        points = points[keep]
        if truth.tangent_frames is not None:
            truth.tangent_frames = truth.tangent_frames[keep]
    cloud = PointCloud.build(points, intrinsic_dimension(spec))
    if cloud.resolution > spec.h * (1 + 1e-9):
        logger.warning(
            "generated %s cloud has resolution %.4g above the target %.4g",
            spec.kind,
            cloud.resolution,
            spec.h,
        )
    logger.info("generated %s cloud: %d points in R^%d", spec.kind, len(cloud), cloud.n)
    return cloud, truth
