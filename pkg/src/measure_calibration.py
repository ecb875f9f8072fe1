"""
This module implements the measure-theoretic checks on a surface family:
discrete k-dimensional Hausdorff measure and calibration integrals over
grid cells, the calibration mass bounds with Ahlfors ratios, the
projection covering test behind the lower volume bound, and localized
certification by rescaling a ball to the unit configuration.
"""

import logging
import math
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.special import gamma  # type: ignore

from .errors import ContractViolationError, ResolutionError
from .exterior_algebra import CalibrationField, ConstantKForm, OrientedPlane
from .geometry_core import Ball, PointCloud
from .reifenberg_builder import ParamSurface, SurfaceFamily, build_family

logger = logging.getLogger(__name__)

# A ball must span this many grid cells
MIN_CELLS_ACROSS = 8
QUADRATURE_TOL = 0.01
# Per-cell slack of the positivity transfer inequality
POSITIVITY_GRID_TOL = 0.01
DEFAULT_C_LOWER = 10.0
DEFAULT_C_UPPER = 10.0
AGREEMENT_TOL = 0.01
# Occupancy cells are this many surface grid spacings wide
OCCUPANCY_CELL_FACTOR = 2
REGIONS = ("image", "base")


def unit_ball_volume(k: int) -> float:
    """omega_k = pi^(k/2) / Gamma(k/2 + 1)."""
    if k < 0:
        raise ContractViolationError("dimension must be nonnegative")
    return float(np.pi ** (k / 2) / gamma(k / 2 + 1))


def cell_fractions(surface: ParamSurface, ball: Ball, region: str = "image") -> np.ndarray:
    """
    Fraction of every cell's corners inside a closed ball.

    Parameters:
        surface: The surface.
        ball: The region.
        region: "image" tests the corner images, "base" their base-plane
            embedding.

    Returns:
        Array of shape (cells,).
    """
    if region not in REGIONS:
        raise ContractViolationError(f"unknown region {region!r}")
    if 2 * ball.radius < MIN_CELLS_ACROSS * surface.spacing:
        raise ResolutionError(
            f"ball of radius {ball.radius:.4g} spans fewer than "
            f"{MIN_CELLS_ACROSS} cells of size {surface.spacing:.4g}",
            {"radius": ball.radius, "spacing": surface.spacing},
        )
    nodes = surface.positions if region == "image" else surface.base_positions
    corners = surface.cell_corners(nodes)
    inside = np.linalg.norm(corners - ball.center, axis=-1) <= ball.radius
    return inside.mean(axis=1)


def hausdorff_measure(surface: ParamSurface, ball: Ball, region: str = "image") -> float:
    """
    Discrete H^k(S ∩ B): cell volumes sqrt(det(J J^T)) g^k weighted by the
    fraction of corners inside the ball, summed in cell order.
    """
    fractions = cell_fractions(surface, ball, region)
    return float(np.sum(fractions * surface.cell_volumes()))


def integrate_form(
    surface: ParamSurface,
    form: ConstantKForm,
    ball: Ball,
    region: str = "image",
) -> float:
    """
    Discrete integral of a constant form over S ∩ B.

    The form is evaluated on the unnormalized finite-difference frame of
    every cell, which makes the sum the integral of the pullback.
    """
    if (form.n, form.k) != (surface.n, surface.k):
        raise ContractViolationError(
            f"a ({form.n}, {form.k}) form cannot be integrated over a "
            f"{surface.k}-surface in R^{surface.n}"
        )
    fractions = cell_fractions(surface, ball, region)
    values = form.evaluate_frames(surface.cell_jacobians()) * surface.spacing**surface.k
    return float(np.sum(fractions * values))


@dataclass
class VolumeReport:
    """
    Measure and calibration bounds of one surface on one ball.

    Attributes:
        level: Level index of the surface (-1 for a standalone surface).
        radius: Level scale r_a.
        region: The ball measured.
        measure: H^k(S_r ∩ region).
        ahlfors_ratio: measure / (omega_k radius^k).
        calibration_integral: Integral of Omega_0 over S_r ∩ B_{1+eps}.
        lower_bound: 1 - c_lower delta.
        upper_bound: (1 + c_upper eps) / (alpha - 3 eps / 2).
        within_bounds: The ratio lies between the bounds up to the quadrature
            tolerance.
        mass_bound_ok: measure <= calibration_integral / (alpha - 3 eps / 2).
        positivity_min: Smallest Omega_0 value on a cell frame.
        positivity_ok: positivity_min >= alpha - 3 eps / 2 - grid tolerance.
        required_c_lower: Smallest c_lower the measured ratio needs.
        required_c_upper: Smallest c_upper the measured ratio needs.
        flagged: The ratio is outside the bounds, so a required constant
            exceeds the configured one.
        limit_measure: Measure reported for S itself, None when the finest
            levels disagree or were not compared.
    """

    level: int
    radius: float
    region: Ball
    measure: float
    ahlfors_ratio: float
    calibration_integral: float
    lower_bound: float
    upper_bound: float
    within_bounds: bool
    mass_bound_ok: bool
    positivity_min: float
    positivity_ok: bool
    required_c_lower: float
    required_c_upper: float
    flagged: bool
    limit_measure: Optional[float] = None

    def to_json(self) -> Dict[str, Any]:
        data = {
            key: None if isinstance(value, float) and not math.isfinite(value) else value
            for key, value in self.__dict__.items()
        }
        data["region"] = self.region.to_json()
        return data

    @classmethod
    def from_json(cls, data: Dict[str, Any]) -> "VolumeReport":
        values = dict(data)
        region = values.pop("region")
        return cls(region=Ball(np.array(region["center"]), region["radius"]), **values)


def _positivity_floor(alpha: float, epsilon: float) -> float:
    floor = alpha - 1.5 * epsilon
    if floor <= 0:
        raise ContractViolationError(
            f"alpha - 3 eps / 2 = {floor:.4g} must be positive"
        )
    return floor


def surface_volume_report(
    surface: ParamSurface,
    form: ConstantKForm,
    ball: Ball,
    outer_ball: Ball,
    alpha: float,
    delta: float,
    epsilon: float,
    c_lower: float = DEFAULT_C_LOWER,
    c_upper: float = DEFAULT_C_UPPER,
    level: int = -1,
    radius: float = 0.0,
) -> VolumeReport:
    """
    Measure one surface on `ball` and compare it with the calibration
    bounds; the calibration integral is taken over `outer_ball`.
    """
    floor = _positivity_floor(alpha, epsilon)
    measure = hausdorff_measure(surface, ball)
    integral = integrate_form(surface, form, outer_ball)
    ratio = measure / (unit_ball_volume(surface.k) * ball.radius**surface.k)
    lower = 1.0 - c_lower * delta
    upper = (1.0 + c_upper * epsilon) / floor

    values = form.evaluate_frames(surface.cell_frames())
    in_region = cell_fractions(surface, outer_ball) > 0
    positivity_min = float(values[in_region].min()) if np.any(in_region) else float("nan")

    required_lower = (1.0 - ratio) / delta if delta > 0 else (0.0 if ratio >= 1 else np.inf)
    required_upper = (floor * ratio - 1.0) / epsilon if epsilon > 0 else (
        0.0 if floor * ratio <= 1 else np.inf
    )
    required_lower = float(max(0.0, required_lower))
    required_upper = float(max(0.0, required_upper))
    within = bool(lower * (1 - QUADRATURE_TOL) <= ratio <= upper * (1 + QUADRATURE_TOL))

    return VolumeReport(
        level=level,
        radius=radius,
        region=ball,
        measure=measure,
        ahlfors_ratio=float(ratio),
        calibration_integral=integral,
        lower_bound=lower,
        upper_bound=upper,
        within_bounds=within,
        mass_bound_ok=bool(measure <= integral / floor * (1 + QUADRATURE_TOL)),
        positivity_min=positivity_min,
        positivity_ok=bool(positivity_min >= floor - POSITIVITY_GRID_TOL),
        required_c_lower=required_lower,
        required_c_upper=required_upper,
        flagged=not within,
    )


@dataclass
class CalibrationBounds:
    """
    Per-level volume reports of a family and the closedness check.

    Attributes:
        reports: One report per level.
        base_integrals: Integral of Omega_0 over the base-region ball
            B_{1+eps} per level.
        closed: The base integrals vary by less than twice the quadrature
            tolerance.
        limit_measure: Finest-levels measure of S, if the levels agree.
    """

    reports: List[VolumeReport]
    base_integrals: List[float]
    closed: bool
    limit_measure: Optional[float]

    def to_json(self) -> Dict[str, Any]:
        return {
            "reports": [report.to_json() for report in self.reports],
            "base_integrals": self.base_integrals,
            "closed": self.closed,
            "limit_measure": self.limit_measure,
        }


def limit_measure(values: Sequence[float], tolerance: float = AGREEMENT_TOL) -> Optional[float]:
    """
    Measure reported for the limit set: the finest value, provided the
    finest three values agree within a relative tolerance.

    Parameters:
        values: Measures per level, coarsest first.
        tolerance: Allowed relative spread.

    Returns:
        The finest value, or None when fewer than three levels exist or
        they disagree.
    """
    if len(values) < 3:
        return None
    finest = np.asarray(values[-3:], dtype=float)
    spread = float(finest.max() - finest.min())
    if spread > tolerance * float(np.abs(finest).max()):
        logger.warning("finest level measures disagree: %s", finest.tolist())
        return None
    return float(finest[-1])


def calibration_bounds_check(
    family: SurfaceFamily,
    field: CalibrationField,
    alpha: float,
    delta: float,
    epsilon: Optional[float] = None,
    c_lower: float = DEFAULT_C_LOWER,
    c_upper: float = DEFAULT_C_UPPER,
    tolerance: float = QUADRATURE_TOL,
) -> CalibrationBounds:
    """
    Check the calibration mass bounds at every level of a family.

    Parameters:
        family: The built family.
        field: Its calibration field; the constant part is integrated.
        alpha: Positivity level of the hypotheses.
        delta: Flatness level of the hypotheses.
        epsilon: Calibration slack, the field's by default.
        c_lower: Constant of the lower Ahlfors bound.
        c_upper: Constant of the upper Ahlfors bound.
        tolerance: Quadrature tolerance of the closedness check.

    Returns:
        The per-level reports and the closedness verdict. Violations are
        entries, nothing is raised.
    """
    epsilon = field.epsilon if epsilon is None else epsilon
    origin = np.zeros(family.base_plane.n)
    unit = Ball(origin, 1.0)
    outer = Ball(origin, 1.0 + family.epsilon)

    reports = []
    base_integrals = []
    for level, (radius, surface) in enumerate(zip(family.radii, family.surfaces)):
        report = surface_volume_report(
            surface, field.constant, unit, outer, alpha, delta, epsilon,
            c_lower, c_upper, level, radius,
        )
        if report.flagged:
            logger.warning(
                "level %d needs constants (%.3g, %.3g) above the configured ones",
                level,
                report.required_c_lower,
                report.required_c_upper,
            )
        reports.append(report)
        base_integrals.append(integrate_form(surface, field.constant, outer, region="base"))

    spread = max(base_integrals) - min(base_integrals)
    scale = max(abs(v) for v in base_integrals)
    closed = spread <= 2 * tolerance * scale if scale > 0 else spread == 0
    limit = limit_measure([report.measure for report in reports])
    if reports:
        reports[-1].limit_measure = limit

    return CalibrationBounds(
        reports=reports,
        base_integrals=base_integrals,
        closed=bool(closed),
        limit_measure=limit,
    )


def projection_covering_check(
    surface: ParamSurface,
    base_plane: OrientedPlane,
    delta: float,
    c_lower: float = DEFAULT_C_LOWER,
) -> Tuple[bool, float]:
    """
    Check that the projection of S ∩ B_1 onto the base plane covers the
    disk of radius 1 - c_lower delta.

    The disk is tiled by square cells twice the surface grid spacing wide;
    a cell counts when it lies entirely inside the disk and is occupied
    when some projected node falls into it.

    Returns:
        Whether every cell is occupied, and the occupied fraction.
    """
    radius = 1.0 - c_lower * delta
    if radius <= 0:
        logger.warning("covering disk is empty for delta=%.4g", delta)
        return True, 1.0

    nodes = surface.positions[np.linalg.norm(surface.positions, axis=1) <= 1.0]
    coords = base_plane.coordinates(nodes)
    width = OCCUPANCY_CELL_FACTOR * surface.spacing
    half = int(np.ceil(radius / width))

    axis = np.arange(-half, half)
    lower_corners = np.stack(
        np.meshgrid(*([axis] * base_plane.k), indexing="ij"), axis=-1
    ).reshape(-1, base_plane.k)
    far_corner = np.maximum(np.abs(lower_corners), np.abs(lower_corners + 1)) * width
    tiles = lower_corners[np.linalg.norm(far_corner, axis=1) <= radius]
    if len(tiles) == 0:
        return True, 1.0

    hit = {tuple(cell) for cell in np.floor(coords / width).astype(int)}
    occupied = sum(tuple(tile) in hit for tile in tiles)
    fraction = occupied / len(tiles)
    return occupied == len(tiles), float(fraction)


def localized_certify(
    cloud: PointCloud,
    field: CalibrationField,
    center: np.ndarray,
    s: float,
    alpha: float,
    delta: float,
    epsilon: float,
    levels: int,
    domain_radius: float = 2.0,
    c_lower: float = DEFAULT_C_LOWER,
    c_upper: float = DEFAULT_C_UPPER,
    **options: Any,
) -> VolumeReport:
    """
    Certify the volume bounds on B_s(x) by moving B_{2s}(x) to B_2(0).

    The cloud is mapped by y -> (y - x) / s, the family is built and
    checked there, and measures and integrals are scaled back by s^k.

    Parameters:
        cloud: The sample set.
        field: Its calibration field.
        center: x.
        s: Ball radius.
        alpha: Positivity level.
        delta: Flatness level.
        epsilon: Outer scale of the construction.
        levels: Last level index.
        domain_radius: Radius of the domain B_{2s}(x) must lie in.
        c_lower: Constant of the lower Ahlfors bound.
        c_upper: Constant of the upper Ahlfors bound.
        **options: Further ReifenbergBuilder parameters.

    Returns:
        The finest-level report in original coordinates, limit measure
        included.
    """
    center = np.asarray(center, dtype=float)
    if s <= 0 or np.linalg.norm(center) + 2 * s > domain_radius:
        raise ContractViolationError(
            f"B_{2 * s:g}(x) escapes the domain ball of radius {domain_radius:g}"
        )

    moved = cloud.transformed(shift=-center / s, scale=1.0 / s)
    keep = np.linalg.norm(moved.points, axis=1) <= 2.0
    local = PointCloud(moved.points[keep], cloud.k, resolution=moved.resolution)
    local_field = field.localized(center, s)

    family = build_family(local, epsilon, levels, local_field, **options)
    bounds = calibration_bounds_check(
        family, local_field, alpha, delta, c_lower=c_lower, c_upper=c_upper
    )
    report = bounds.reports[-1]
    factor = s**cloud.k
    logger.info(
        "localized certification at |x|=%.4g, s=%.4g: ratio %.4f",
        float(np.linalg.norm(center)),
        s,
        report.ahlfors_ratio,
    )
    return VolumeReport(
        level=report.level,
        radius=report.radius * s,
        region=Ball(center, s),
        measure=report.measure * factor,
        ahlfors_ratio=report.ahlfors_ratio,
        calibration_integral=report.calibration_integral * factor,
        lower_bound=report.lower_bound,
        upper_bound=report.upper_bound,
        within_bounds=report.within_bounds,
        mass_bound_ok=report.mass_bound_ok,
        positivity_min=report.positivity_min,
        positivity_ok=report.positivity_ok,
        required_c_lower=report.required_c_lower,
        required_c_upper=report.required_c_upper,
        flagged=report.flagged,
        limit_measure=None if bounds.limit_measure is None else bounds.limit_measure * factor,
    )
