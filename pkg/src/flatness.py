"""
This module contains the multiscale flatness profile of a sample set:
the two-sided flatness theta(x, r), the one-sided beta_inf(x, r), the
calibration value of the fitted plane, dyadic Dini sums, and the driver
that certifies the almost-calibrated Reifenberg hypotheses over a range
of dyadic scales.
"""

import logging
import math
import time
from dataclasses import dataclass, field
from functools import partial
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from .errors import ContractViolationError, DegenerateFitError, ResolutionError
from .exterior_algebra import CalibrationField, OrientedPlane, evaluate
from .fit_objectives import make_objective
from .geometry_core import (
    FIT_MAX_ITER,
    Ball,
    PointCloud,
    best_fit_plane,
    farthest_point_net,
)
from .parallel import parallel_map

logger = logging.getLogger(__name__)

ORIENTATION_TIE_TOL = 1e-9
# The finest certified scale must be at least this many resolutions
RESOLUTION_FLOOR = 4.0
LN2 = math.log(2.0)


@dataclass(frozen=True, eq=False)
class FlatnessRecord:
    """
    Flatness data of one ball B_r(x).

    Attributes:
        x: Center.
        r: Radius.
        theta: Symmetric fit objective divided by r.
        beta_inf: One-sided fit objective divided by r, never above theta.
        plane: The theta-plane, oriented by the constant calibration part.
        omega_value: Field value at x on the oriented plane.
        ambiguous: The constant part vanishes on the plane (within
            ORIENTATION_TIE_TOL), so the orientation was not chosen.
        omega_alternate: Field value for the opposite orientation, when
            ambiguous.
        degenerate: Fewer than k+1 points in the ball; the plane is the
            least-squares fallback.
        center_index: Index of the center in the cloud.
        scale_index: Dyadic exponent j of r = 2^-j.
    """

    x: np.ndarray
    r: float
    theta: float
    beta_inf: float
    plane: OrientedPlane
    omega_value: float
    ambiguous: bool = False
    omega_alternate: Optional[float] = None
    degenerate: bool = False
    center_index: int = -1
    scale_index: int = -1

    def to_json(self) -> Dict[str, Any]:
        return {
            "x": [float(v) for v in self.x],
            "r": float(self.r),
            "theta": float(self.theta),
            "beta_inf": float(self.beta_inf),
            "plane": self.plane.to_json(),
            "omega_value": float(self.omega_value),
            "ambiguous": self.ambiguous,
            "omega_alternate": (
                None if self.omega_alternate is None else float(self.omega_alternate)
            ),
            "degenerate": self.degenerate,
            "center_index": int(self.center_index),
            "scale_index": int(self.scale_index),
        }

    @classmethod
    def from_json(cls, data: Dict[str, Any]) -> "FlatnessRecord":
        return cls(
            x=np.array(data["x"]),
            r=data["r"],
            theta=data["theta"],
            beta_inf=data["beta_inf"],
            plane=OrientedPlane.from_json(data["plane"]),
            omega_value=data["omega_value"],
            ambiguous=data["ambiguous"],
            omega_alternate=data["omega_alternate"],
            degenerate=data["degenerate"],
            center_index=data["center_index"],
            scale_index=data["scale_index"],
        )


@dataclass(frozen=True)
class ScalePolicy:
    """Dyadic scales 2^-j for j_min <= j <= j_max inside B_R(0)."""

    j_min: int = 0
    j_max: int = 6
    domain_radius: float = 2.0

    def __post_init__(self):
        if self.j_max < self.j_min:
            raise ContractViolationError("j_max must not be below j_min")
        if self.domain_radius <= 0:
            raise ContractViolationError("domain radius must be positive")

    def exponents(self) -> List[int]:
        return list(range(self.j_min, self.j_max + 1))

    def scales(self) -> List[float]:
        return [2.0**-j for j in self.exponents()]


@dataclass(frozen=True)
class NetPolicy:
    """
    Centers per scale s: a greedy farthest-point net of covering radius
    net_fraction * s, truncated at max_centers.
    """

    net_fraction: float = 0.5
    max_centers: int = 64

    def __post_init__(self):
        if self.net_fraction <= 0 or self.max_centers < 1:
            raise ContractViolationError("net policy needs positive parameters")


@dataclass(frozen=True)
class DiniSum:
    """
    Dyadic Riemann sum of the L^2 Dini integral at one center.

    Attributes:
        value: Sum of theta^2 ln 2 over the valid scales.
        thetas: theta per valid scale, coarsest first.
        truncated_at: First exponent j skipped because 2^-j < 4h, if any.
    """

    value: float
    thetas: List[float]
    truncated_at: Optional[int] = None


def orient_by_field(
    plane: OrientedPlane,
    field: CalibrationField,
    x: np.ndarray,
) -> Tuple[OrientedPlane, float, bool, Optional[float]]:
    """
    Orient a plane so the constant calibration part is nonnegative.

    Returns:
        The oriented plane, the field value on it at x, the ambiguity
        flag and, when ambiguous, the value for the other orientation.
    """
    constant_value = evaluate(field.constant, plane)
    if abs(constant_value) <= ORIENTATION_TIE_TOL:
        value = field.evaluate(plane, x)
        alternate = field.evaluate(plane.flipped(), x)
        return plane, value, True, alternate
    if constant_value < 0:
        plane = plane.flipped()
    return plane, field.evaluate(plane, x), False, None


def theta(
    cloud: PointCloud,
    x: np.ndarray,
    r: float,
    k: Optional[int] = None,
    max_iter: int = FIT_MAX_ITER,
) -> Tuple[float, OrientedPlane]:
    """
    Two-sided flatness theta(x, r) and its plane.

    Parameters:
        cloud: The sample set.
        x: Center.
        r: Radius.
        k: Plane dimension, the cloud's by default.
        max_iter: Nelder-Mead iteration cap.

    Returns:
        The symmetric objective divided by r, and the achieving plane.
    """
    plane, value = best_fit_plane(cloud, Ball(x, r), k, "symmetric", max_iter=max_iter)
    return value / r, plane


def beta_inf(
    cloud: PointCloud,
    x: np.ndarray,
    r: float,
    k: Optional[int] = None,
    max_iter: int = FIT_MAX_ITER,
) -> float:
    """One-sided flatness beta_inf(x, r)."""
    _, value = best_fit_plane(cloud, Ball(x, r), k, "one-sided", max_iter=max_iter)
    return value / r


def positivity(
    cloud: PointCloud,
    x: np.ndarray,
    r: float,
    field: CalibrationField,
    k: Optional[int] = None,
    max_iter: int = FIT_MAX_ITER,
) -> float:
    """
    Calibration value of the theta-plane at (x, r).

    The plane is oriented so the constant part is nonnegative on it and
    the field is evaluated at x.
    """
    _, plane = theta(cloud, x, r, k, max_iter)
    _, value, _, _ = orient_by_field(plane, field, x)
    return value


def flatness_record(
    cloud: PointCloud,
    x: np.ndarray,
    r: float,
    field: CalibrationField,
    k: Optional[int] = None,
    max_iter: int = FIT_MAX_ITER,
    center_index: int = -1,
    scale_index: int = -1,
) -> FlatnessRecord:
    """
    Compute theta, beta_inf and the calibration value of one ball.

    The theta-plane is scored as a one-sided candidate, so beta_inf never
    exceeds theta. Degenerate balls are recorded with the fallback plane.

    Returns:
        The record.
    """
    k = cloud.k if k is None else k
    ball = Ball(x, r)
    degenerate = False
    try:
        plane, symmetric = best_fit_plane(
            cloud, ball, k, "symmetric", max_iter=max_iter
        )
        _, one_sided = best_fit_plane(
            cloud, ball, k, "one-sided", candidates=[plane], max_iter=max_iter
        )
    except DegenerateFitError as error:
        logger.warning("degenerate ball at r=%.4g: %s", r, error)
        degenerate = True
        plane = error.plane
        points = cloud.points_in(ball)
        symmetric = make_objective("symmetric", points, ball).value(plane)
        one_sided = make_objective("one-sided", points, ball).value(plane)

    plane, value, ambiguous, alternate = orient_by_field(plane, field, x)
    if ambiguous:
        logger.warning("orientation tie at r=%.4g, both values recorded", r)

    return FlatnessRecord(
        x=np.asarray(x, dtype=float),
        r=float(r),
        theta=symmetric / r,
        beta_inf=min(one_sided, symmetric) / r,
        plane=plane,
        omega_value=value,
        ambiguous=ambiguous,
        omega_alternate=alternate,
        degenerate=degenerate,
        center_index=center_index,
        scale_index=scale_index,
    )


def dini_sum(
    cloud: PointCloud,
    x: np.ndarray,
    j_max: int,
    k: Optional[int] = None,
    j_min: int = 0,
    max_iter: int = FIT_MAX_ITER,
) -> DiniSum:
    """
    Dyadic Dini sum: sum of theta(x, 2^-j)^2 ln 2 over j_min <= j <= j_max.

    Scales below 4h are not evaluated; the first skipped exponent is
    reported and the sum over the valid scales returned.
    """
    thetas: List[float] = []
    truncated_at = None
    for j in range(j_min, j_max + 1):
        r = 2.0**-j
        if r < RESOLUTION_FLOOR * cloud.resolution:
            truncated_at = j
            break
        thetas.append(theta(cloud, x, r, k, max_iter)[0])
    return DiniSum(
        value=float(sum(t * t for t in thetas) * LN2),
        thetas=thetas,
        truncated_at=truncated_at,
    )


@dataclass
class ReifenbergCertificate:
    """
    Outcome of a multiscale certification run.

    Attributes:
        n: Ambient dimension.
        k: Intrinsic dimension.
        scales: Certified radii 2^-j, coarsest first.
        exponents: The matching j.
        resolution: Cloud resolution h.
        records: Records in (scale, center) order.
        net_slack: Covering radius of the centers per scale.
        dini_max: Largest Dini sum over 2^-j, j = 0..j_max, at the
            coarsest-scale centers.
        delta: Requested flatness bound, if any.
        alpha: Requested positivity bound, if any.
    """

    n: int
    k: int
    scales: List[float]
    exponents: List[int]
    resolution: float
    records: List[FlatnessRecord]
    net_slack: List[float]
    dini_max: float
    delta: Optional[float] = None
    alpha: Optional[float] = None
    delta_star: float = field(init=False)
    alpha_star: float = field(init=False)

    def __post_init__(self):
        if not self.records:
            raise ContractViolationError("a certificate needs at least one record")
        self.delta_star = max(record.theta for record in self.records)
        self.alpha_star = min(record.omega_value for record in self.records)

    def verdict(self, delta: float, alpha: float) -> bool:
        """True iff delta_star < delta and alpha_star > alpha."""
        return self.delta_star < delta and self.alpha_star > alpha

    def failing(self, delta: float, alpha: float) -> List[FlatnessRecord]:
        """Records with theta >= delta or omega_value <= alpha."""
        return [
            record
            for record in self.records
            if record.theta >= delta or record.omega_value <= alpha
        ]

    def delta_star_with_slack(self) -> float:
        """
        delta_star inflated by the net slack: max over scales of the
        worst theta plus slack / r.
        """
        worst = 0.0
        for j, r, slack in zip(self.exponents, self.scales, self.net_slack):
            thetas = [rec.theta for rec in self.records if rec.scale_index == j]
            if thetas:
                worst = max(worst, max(thetas) + slack / r)
        return worst

    def profile(self) -> List[Dict[str, float]]:
        """Worst theta, worst beta and minimal omega per scale."""
        rows = []
        for j, r in zip(self.exponents, self.scales):
            records = [rec for rec in self.records if rec.scale_index == j]
            if not records:
                continue
            rows.append(
                {
                    "scale": r,
                    "theta_max": max(rec.theta for rec in records),
                    "beta_max": max(rec.beta_inf for rec in records),
                    "omega_min": min(rec.omega_value for rec in records),
                }
            )
        return rows

    def to_json(self) -> Dict[str, Any]:
        data: Dict[str, Any] = {
            "n": self.n,
            "k": self.k,
            "scales": [float(s) for s in self.scales],
            "exponents": list(self.exponents),
            "resolution": float(self.resolution),
            "records": [record.to_json() for record in self.records],
            "net_slack": [float(s) for s in self.net_slack],
            "dini_max": float(self.dini_max),
            "delta": self.delta,
            "alpha": self.alpha,
            "delta_star": float(self.delta_star),
            "alpha_star": float(self.alpha_star),
            "delta_star_with_slack": float(self.delta_star_with_slack()),
            "profile": self.profile(),
        }
        if self.delta is not None and self.alpha is not None:
            data["verdict"] = self.verdict(self.delta, self.alpha)
            data["failing"] = [
                {"x": [float(v) for v in rec.x], "r": rec.r, "theta": rec.theta,
                 "omega_value": rec.omega_value}
                for rec in self.failing(self.delta, self.alpha)
            ]
        return data

    @classmethod
    def from_json(cls, data: Dict[str, Any]) -> "ReifenbergCertificate":
        return cls(
            n=data["n"],
            k=data["k"],
            scales=data["scales"],
            exponents=data["exponents"],
            resolution=data["resolution"],
            records=[FlatnessRecord.from_json(rec) for rec in data["records"]],
            net_slack=data["net_slack"],
            dini_max=data["dini_max"],
            delta=data["delta"],
            alpha=data["alpha"],
        )


def _record_job(
    cloud: PointCloud,
    field: CalibrationField,
    k: int,
    max_iter: int,
    job: Tuple[int, int],
) -> FlatnessRecord:
    j, index = job
    return flatness_record(
        cloud,
        cloud.points[index],
        2.0**-j,
        field,
        k,
        max_iter,
        center_index=index,
        scale_index=j,
    )


def _theta_job(
    cloud: PointCloud,
    k: int,
    max_iter: int,
    job: Tuple[int, int],
) -> float:
    j, index = job
    return theta(cloud, cloud.points[index], 2.0**-j, k, max_iter)[0]


def scale_centers(
    cloud: PointCloud,
    r: float,
    scale_policy: ScalePolicy,
    net_policy: NetPolicy,
) -> Tuple[np.ndarray, float]:
    """
    Centers of the balls tested at radius r.

    The candidates are the cloud points x with B_r(x) inside the domain
    ball; the net starts from the candidate nearest the origin.

    Returns:
        Cloud indices of the centers (empty when no ball fits) and the
        covering radius they achieve over the candidates.
    """
    radii = np.linalg.norm(cloud.points, axis=1)
    eligible = np.flatnonzero(radii + r <= scale_policy.domain_radius)
    if len(eligible) == 0:
        return eligible, 0.0
    start = int(np.argmin(radii[eligible]))
    order, covering = farthest_point_net(
        cloud.points[eligible],
        start,
        net_policy.max_centers,
        stop_radius=net_policy.net_fraction * r,
    )
    return eligible[order], float(covering[-1])


def certify(
    cloud: PointCloud,
    field: CalibrationField,
    scale_policy: ScalePolicy = ScalePolicy(),
    net_policy: NetPolicy = NetPolicy(),
    delta: Optional[float] = None,
    alpha: Optional[float] = None,
    workers: int = 1,
    k: Optional[int] = None,
    max_iter: int = FIT_MAX_ITER,
) -> ReifenbergCertificate:
    """
    Certify the almost-calibrated Reifenberg hypotheses over dyadic scales.

    Parameters:
        cloud: The sample set.
        field: The calibration field.
        scale_policy: Scales and domain ball.
        net_policy: Center selection per scale.
        delta: Flatness bound for the verdict.
        alpha: Positivity bound for the verdict.
        workers: Pool width for the per-ball fits.
        k: Intrinsic dimension, the cloud's by default.
        max_iter: Nelder-Mead iteration cap per fit.

    Returns:
        The certificate, records in (scale, center) order.
    """
    k = cloud.k if k is None else k
    if (field.n, field.k) != (cloud.n, k):
        raise ContractViolationError(
            f"field of type ({field.n}, {field.k}) does not match a "
            f"{k}-dimensional cloud in R^{cloud.n}"
        )

    finest = 2.0**-scale_policy.j_max
    floor = RESOLUTION_FLOOR * cloud.resolution
    if finest < floor:
        raise ResolutionError(
            f"finest scale {finest:.4g} is below {RESOLUTION_FLOOR:g}h = {floor:.4g}",
            {
                "finest_scale": finest,
                "resolution": cloud.resolution,
                "min_scale": floor,
                "max_j": int(math.floor(-math.log2(floor))) if floor > 0 else None,
            },
        )

    started = time.perf_counter()
    exponents, scales, slack, jobs = [], [], [], []
    for j in scale_policy.exponents():
        r = 2.0**-j
        centers, covering = scale_centers(cloud, r, scale_policy, net_policy)
        if len(centers) == 0:
            logger.warning("no ball of radius %.4g fits in the domain", r)
            continue
        exponents.append(j)
        scales.append(r)
        slack.append(covering)
        jobs.extend((j, int(index)) for index in centers)
        logger.info("scale 2^-%d: %d centers, net slack %.4g", j, len(centers), covering)

    records = parallel_map(partial(_record_job, cloud, field, k, max_iter), jobs, workers)

    # Dini sums run from the unit scale down to j_max at the coarsest-scale
    # centers; every such scale is above the resolution floor checked above
    dini_exponents = list(range(0, scale_policy.j_max + 1))
    known = {(rec.scale_index, rec.center_index): rec.theta for rec in records}
    coarse = [index for j, index in jobs if exponents and j == exponents[0]]
    extra = [
        (j, index) for index in coarse for j in dini_exponents if (j, index) not in known
    ]
    for job, value in zip(
        extra, parallel_map(partial(_theta_job, cloud, k, max_iter), extra, workers)
    ):
        known[job] = value
    dini_values = [
        sum(known[(j, index)] ** 2 for j in dini_exponents) * LN2 for index in coarse
    ]

    logger.info(
        "certified %d balls over %d scales in %.1fs",
        len(records),
        len(exponents),
        time.perf_counter() - started,
    )
    return ReifenbergCertificate(
        n=cloud.n,
        k=k,
        scales=scales,
        exponents=exponents,
        resolution=cloud.resolution,
        records=records,
        net_slack=slack,
        dini_max=float(max(dini_values, default=0.0)),
        delta=delta,
        alpha=alpha,
    )
