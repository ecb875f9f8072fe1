"""
Unit tests for flatness module.
"""

import math

import numpy as np
import pytest

from src.errors import ContractViolationError, ResolutionError
from src.exterior_algebra import CalibrationField, ConstantKForm, OrientedPlane, evaluate, pullback
from src.flatness import (
    NetPolicy,
    ReifenbergCertificate,
    ScalePolicy,
    beta_inf,
    certify,
    dini_sum,
    flatness_record,
    orient_by_field,
    positivity,
    scale_centers,
    theta,
)
from src.generators import GeneratorSpec, generate
from src.geometry_core import PointCloud, grassmann_distance
from src.standard_forms import volume_form

MAX_ITER = 60


@pytest.fixture(scope="module")
def flat_cloud():
    cloud, _ = generate(GeneratorSpec("plane", h=0.05, extent=1.2, domain_radius=1.2))
    return cloud


@pytest.fixture(scope="module")
def curved_cloud():
    cloud, _ = generate(
        GeneratorSpec("graph", h=0.05, extent=1.2, domain_radius=1.2, curvature=0.5)
    )
    return cloud


@pytest.fixture(scope="module")
def koch_cloud():
    cloud, _ = generate(GeneratorSpec("koch", h=0.01, eta=0.5, depth=4))
    return cloud


@pytest.fixture(scope="module")
def volume_field():
    return CalibrationField(volume_form(3, 2))


# theta tests
def test_theta_of_flat_cloud(flat_cloud):
    """Tests if a flat cloud has small theta and the flat plane."""
    value, plane = theta(flat_cloud, np.zeros(3), 0.5, max_iter=MAX_ITER)
    assert value < 0.2
    assert grassmann_distance(plane, OrientedPlane.coordinate(3, (1, 2))) < 0.15


def test_theta_grows_with_curvature(flat_cloud, curved_cloud):
    """Tests if a curved graph is less flat than a plane at unit scale."""
    flat, _ = theta(flat_cloud, np.zeros(3), 1.0, max_iter=MAX_ITER)
    curved, _ = theta(curved_cloud, np.zeros(3), 1.0, max_iter=MAX_ITER)
    assert curved > flat


def test_beta_of_flat_cloud(flat_cloud):
    """Tests if a flat cloud lies on its one-sided plane."""
    assert beta_inf(flat_cloud, np.zeros(3), 0.5, max_iter=MAX_ITER) < 1e-6


# flatness_record tests
def test_record_beta_below_theta(curved_cloud, volume_field):
    """Tests if beta_inf never exceeds theta."""
    record = flatness_record(curved_cloud, np.zeros(3), 0.5, volume_field, max_iter=MAX_ITER)
    assert record.beta_inf <= record.theta
    assert not record.degenerate
    assert record.r == 0.5


def test_record_json_round_trip(flat_cloud, volume_field):
    """Tests if a record survives its JSON representation."""
    record = flatness_record(flat_cloud, np.zeros(3), 0.5, volume_field, max_iter=MAX_ITER)
    restored = type(record).from_json(record.to_json())
    assert restored.theta == record.theta
    assert np.allclose(restored.plane.frame, record.plane.frame)


def test_rigid_motion_equivariance(flat_cloud, volume_field):
    """Tests if a rotation keeps theta and moves omega as the pulled-back form predicts."""
    angle = 0.4
    rotation = np.array(
        [
            [1.0, 0.0, 0.0],
            [0.0, math.cos(angle), -math.sin(angle)],
            [0.0, math.sin(angle), math.cos(angle)],
        ]
    )
    record = flatness_record(flat_cloud, np.zeros(3), 0.5, volume_field, max_iter=MAX_ITER)
    moved = flatness_record(
        flat_cloud.transformed(rotation=rotation), np.zeros(3), 0.5, volume_field, max_iter=MAX_ITER
    )
    predicted = evaluate(pullback(volume_form(3, 2), rotation), record.plane)
    assert moved.theta == pytest.approx(record.theta, abs=0.02)
    assert moved.omega_value == pytest.approx(predicted, abs=0.02)
    assert predicted == pytest.approx(math.cos(angle), abs=0.02)


# orient_by_field tests
def test_orientation_flips_negative_plane(volume_field):
    """Tests if a plane with negative constant value is flipped."""
    plane = OrientedPlane.coordinate(3, (2, 1))
    oriented, value, ambiguous, alternate = orient_by_field(plane, volume_field, np.zeros(3))
    assert value == pytest.approx(1.0)
    assert not ambiguous
    assert alternate is None
    assert not oriented.same_orientation(plane)


def test_orientation_tie_records_both_values():
    """Tests if a vanishing constant part is reported as ambiguous."""
    field = CalibrationField(ConstantKForm.from_terms(3, 2, {(1, 3): 1.0}))
    plane = OrientedPlane.coordinate(3, (1, 2))
    _, value, ambiguous, alternate = orient_by_field(plane, field, np.zeros(3))
    assert ambiguous
    assert value == pytest.approx(0.0)
    assert alternate == pytest.approx(-value)


# positivity tests
def test_positivity_ignores_sign_of_form(flat_cloud):
    """Tests if the plane orientation follows the calibration."""
    field = CalibrationField(-1.0 * volume_form(3, 2))
    assert positivity(flat_cloud, np.zeros(3), 0.5, field, max_iter=MAX_ITER) > 0.98


# dini_sum tests
def test_dini_sum_truncates_at_resolution(flat_cloud):
    """Tests if scales below four resolutions are skipped."""
    result = dini_sum(flat_cloud, np.zeros(3), 5, max_iter=MAX_ITER)
    floor = 4 * flat_cloud.resolution
    assert result.truncated_at is not None
    assert 2.0**-result.truncated_at < floor
    assert len(result.thetas) == result.truncated_at
    assert result.value == pytest.approx(sum(t * t for t in result.thetas) * math.log(2))


def test_dini_sum_of_koch_curves():
    """Tests if bumps of constant height keep the Dini sum large while decaying bumps do not."""
    center = np.array([-1.25, 0.0])
    sums = {}
    for name, spec in (
        ("straight", GeneratorSpec("koch", h=0.01, eta=0.5, depth=1)),
        ("constant", GeneratorSpec("koch", h=0.01, eta=0.5, depth=4)),
        ("decay", GeneratorSpec("koch", h=0.01, schedule="decay", depth=4)),
    ):
        cloud, _ = generate(spec)
        sums[name] = dini_sum(cloud, center, 3, j_min=2, max_iter=MAX_ITER)
    assert sums["constant"].truncated_at is None
    assert sums["constant"].value > sums["decay"].value
    assert sums["constant"].value > 4 * sums["straight"].value
    assert sums["decay"].thetas[-1] < sums["constant"].thetas[-1]


# contrast tests
def test_plane_with_hole_contrast(flat_cloud):
    """Tests if a hole raises theta to its radius while beta_inf stays at zero."""
    outside_hole = np.linalg.norm(flat_cloud.points, axis=1) > 0.5
    holed = PointCloud.build(flat_cloud.points[outside_hole], 2)
    value, _ = theta(holed, np.zeros(3), 1.0, max_iter=MAX_ITER)
    assert value == pytest.approx(0.5, abs=2 * 0.05)
    assert beta_inf(holed, np.zeros(3), 1.0, max_iter=MAX_ITER) <= 0.05


def test_parallel_planes_beta(flat_cloud):
    """Tests if two parallel patches at distance s give beta_inf s / 2r."""
    separation = 0.4
    shift = np.array([0.0, 0.0, separation])
    points = np.vstack([flat_cloud.points, flat_cloud.points + shift])
    pair = PointCloud.build(points, 2)
    value = beta_inf(pair, np.array([0.0, 0.0, separation / 2]), 1.0, max_iter=MAX_ITER)
    assert value >= separation / 2 - 0.05
    assert value == pytest.approx(separation / 2, abs=0.01)


# scale_centers tests
def test_centers_fit_in_domain(flat_cloud):
    """Tests if every ball around a center stays inside the domain."""
    policy = ScalePolicy(0, 2, domain_radius=1.2)
    centers, slack = scale_centers(flat_cloud, 0.5, policy, NetPolicy(0.5, 8))
    assert 0 < len(centers) <= 8
    assert np.all(np.linalg.norm(flat_cloud.points[centers], axis=1) + 0.5 <= 1.2)
    assert slack >= 0


def test_scale_policy_order():
    """Tests if an empty exponent range is rejected."""
    with pytest.raises(ContractViolationError):
        ScalePolicy(3, 2)


# certify tests
def test_certify_flat_plane(flat_cloud, volume_field):
    """Tests if a flat cloud with the volume form passes."""
    certificate = certify(
        flat_cloud,
        volume_field,
        ScalePolicy(0, 2, domain_radius=1.2),
        NetPolicy(0.5, 4),
        delta=0.5,
        alpha=0.9,
        max_iter=MAX_ITER,
    )
    assert certificate.exponents == [0, 1, 2]
    assert certificate.verdict(0.5, 0.9)
    assert certificate.failing(0.5, 0.9) == []
    assert [rec.scale_index for rec in certificate.records] == sorted(
        rec.scale_index for rec in certificate.records
    )
    assert len(certificate.profile()) == 3
    assert certificate.delta_star_with_slack() >= certificate.delta_star
    assert certificate.dini_max >= 0


def test_certify_fails_strict_flatness(flat_cloud, volume_field):
    """Tests if an unreachable delta fails every ball."""
    certificate = certify(
        flat_cloud,
        volume_field,
        ScalePolicy(1, 1, domain_radius=1.2),
        NetPolicy(0.5, 3),
        max_iter=MAX_ITER,
    )
    assert not certificate.verdict(1e-6, 0.9)
    assert len(certificate.failing(1e-6, 0.9)) == len(certificate.records)


def test_certificate_json_round_trip(flat_cloud, volume_field):
    """Tests if a certificate keeps its summary through JSON."""
    certificate = certify(
        flat_cloud,
        volume_field,
        ScalePolicy(1, 1, domain_radius=1.2),
        NetPolicy(0.5, 2),
        delta=0.5,
        alpha=0.5,
        max_iter=MAX_ITER,
    )
    data = certificate.to_json()
    assert data["verdict"] is True
    restored = ReifenbergCertificate.from_json(data)
    assert restored.delta_star == certificate.delta_star
    assert restored.alpha_star == certificate.alpha_star


def test_certify_is_deterministic(flat_cloud, volume_field):
    """Tests if two runs give identical certificate documents."""
    policies = (ScalePolicy(1, 1, domain_radius=1.2), NetPolicy(0.5, 2))
    first = certify(flat_cloud, volume_field, *policies, delta=0.5, alpha=0.5, max_iter=MAX_ITER)
    second = certify(flat_cloud, volume_field, *policies, delta=0.5, alpha=0.5, max_iter=MAX_ITER)
    assert first.to_json() == second.to_json()


def test_certify_too_fine_scale(flat_cloud, volume_field):
    """Tests if scales below the resolution floor are refused."""
    with pytest.raises(ResolutionError) as error:
        certify(flat_cloud, volume_field, ScalePolicy(0, 6, domain_radius=1.2))
    assert error.value.diagnostic()["diagnostic"]["min_scale"] == pytest.approx(
        4 * flat_cloud.resolution
    )


def test_certify_field_mismatch(flat_cloud):
    """Tests if a field of the wrong degree is rejected."""
    with pytest.raises(ContractViolationError):
        certify(flat_cloud, CalibrationField(volume_form(3, 1)), ScalePolicy(0, 1))


def test_certify_dini_sum_starts_at_unit_scale(flat_cloud, volume_field):
    """Tests if the Dini sums include the scales above the coarsest certified one."""
    certificate = certify(
        flat_cloud,
        volume_field,
        ScalePolicy(1, 1, domain_radius=1.2),
        NetPolicy(0.5, 2),
        max_iter=MAX_ITER,
    )
    expected = max(
        dini_sum(flat_cloud, record.x, 1, max_iter=MAX_ITER).value
        for record in certificate.records
    )
    assert certificate.dini_max == pytest.approx(expected)
    assert "dini_truncated" not in certificate.to_json()


def test_certify_koch_curve_fails(koch_cloud):
    """Tests if a Koch curve with constant bumps fails positivity and lists its balls."""
    certificate = certify(
        koch_cloud,
        CalibrationField(volume_form(2, 1)),
        ScalePolicy(0, 3, domain_radius=2.0),
        NetPolicy(0.5, 8),
        delta=1.0,
        alpha=0.95,
        max_iter=MAX_ITER,
    )
    assert certificate.alpha_star < 0.95
    assert not certificate.verdict(1.0, 0.95)
    failing = certificate.failing(1.0, 0.95)
    assert len(failing) > 0
    data = certificate.to_json()
    assert data["verdict"] is False
    assert len(data["failing"]) == len(failing)
    assert all(entry["omega_value"] <= 0.95 or entry["theta"] >= 1.0 for entry in data["failing"])
