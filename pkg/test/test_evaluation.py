"""
Unit tests for evaluation module.
"""

import numpy as np

from src.evaluation import (
    conclusion_section,
    exit_code,
    hypothesis_section,
    verdict_document,
)
from src.exterior_algebra import OrientedPlane
from src.flatness import FlatnessRecord, ReifenbergCertificate
from src.geometry_core import Ball
from src.measure_calibration import CalibrationBounds, VolumeReport
from src.reifenberg_builder import FamilyReport, LevelReport

QUANTITIES = ("hausdorff_ratio", "grassmann_drift", "velocity")


def _record(theta, omega_value, scale_index=0, ambiguous=False):
    return FlatnessRecord(
        x=np.zeros(3),
        r=2.0**-scale_index,
        theta=theta,
        beta_inf=theta / 2,
        plane=OrientedPlane.coordinate(3, (1, 2)),
        omega_value=omega_value,
        ambiguous=ambiguous,
        scale_index=scale_index,
    )


def _certificate(records):
    return ReifenbergCertificate(
        n=3, k=2, scales=[1.0, 0.5], exponents=[0, 1], resolution=0.01,
        records=records, net_slack=[0.0, 0.0], dini_max=0.01,
    )


def _level(level, outside_exact=True, injectivity_violations=0):
    return LevelReport(
        level=level, radius=0.5 / 2**level, hausdorff=0.01, hausdorff_ratio=0.2,
        grassmann_drift=0.01, plane_disagreements=0, positivity_min=0.99,
        positivity_fraction=1.0, velocity=None if level == 0 else 0.01,
        curvature_proxy=0.0, injectivity_violations=injectivity_violations,
        outside_exact=outside_exact, cover_size=10, cover_components=1,
        fifth_balls_disjoint=True, covers_cloud=True,
    )


def _family_report(levels, stable=True):
    return FamilyReport(
        levels=levels, delta=0.05, epsilon=0.5, positivity_threshold=0.25,
        constants={quantity: 0.2 for quantity in QUANTITIES},
        stable={quantity: stable for quantity in QUANTITIES},
        monotone_refinement=True, aborted=False,
    )


def _bounds(within_bounds=True):
    report = VolumeReport(
        level=0, radius=0.5, region=Ball(np.zeros(3), 1.0), measure=3.14,
        ahlfors_ratio=1.0, calibration_integral=3.14, lower_bound=0.5,
        upper_bound=2.0, within_bounds=within_bounds, mass_bound_ok=True,
        positivity_min=1.0, positivity_ok=True, required_c_lower=0.0,
        required_c_upper=0.0, flagged=not within_bounds,
    )
    return CalibrationBounds([report], [7.07], True, None)


# hypothesis_section tests
def test_hypotheses_pass():
    """Tests if flat and positive records pass."""
    section = hypothesis_section(_certificate([_record(0.01, 0.99)]), 0.05, 0.9)
    assert section["passed"]
    assert section["failing"] == []


def test_hypotheses_list_failing_balls():
    """Tests if a ball above delta fails the section and is listed."""
    records = [_record(0.01, 0.99), _record(0.2, 0.99, scale_index=1)]
    section = hypothesis_section(_certificate(records), 0.05, 0.9)
    assert not section["passed"]
    assert len(section["failing"]) == 1
    assert section["failing"][0]["theta"] == 0.2


def test_ambiguous_orientation_is_only_flagged():
    """Tests if an ambiguous orientation does not decide the section."""
    section = hypothesis_section(_certificate([_record(0.01, 0.99, ambiguous=True)]), 0.05, 0.9)
    entry = next(e for e in section["entries"] if e["name"] == "ambiguous_orientations")
    assert not entry["passed"]
    assert entry["kind"] == "flag"
    assert section["passed"]


# conclusion_section tests
def test_conclusions_pass():
    """Tests if a complete family with closed bounds passes."""
    section = conclusion_section(_family_report([_level(0), _level(1)]), _bounds(), (True, 1.0))
    assert section["passed"]


def test_conclusions_fail_on_moved_outside():
    """Tests if a surface moved outside B_{1+eps} fails the section."""
    section = conclusion_section(
        _family_report([_level(0), _level(1, outside_exact=False)]), _bounds(), (True, 1.0)
    )
    assert not section["passed"]


def test_conclusion_flags_do_not_decide():
    """Tests if unstable constants and Ahlfors misses are only reported."""
    report = _family_report([_level(0), _level(1, injectivity_violations=3)], stable=False)
    section = conclusion_section(report, _bounds(within_bounds=False), (True, 1.0))
    flagged = {e["name"] for e in section["entries"] if e["kind"] == "flag" and not e["passed"]}
    assert {"injectivity", "ahlfors_bounds", "velocity_constant_stable"} <= flagged
    assert section["passed"]


def test_conclusions_after_error():
    """Tests if a failed construction fails the section with its diagnostic."""
    error = {"error": "GluingError", "message": "planes too far apart"}
    section = conclusion_section(None, None, None, error)
    assert not section["passed"]
    assert section["error"] == error


# verdict_document tests
def test_verdict_document():
    """Tests if the verdict needs both sections and sets the exit code."""
    config = {"delta": 0.05, "alpha": 0.9}
    certificate = _certificate([_record(0.01, 0.99)])
    passing = verdict_document(
        config, certificate, _family_report([_level(0)]), _bounds(), (True, 1.0)
    )
    assert passing["verdict"] is True
    assert exit_code(passing) == 0

    failing = verdict_document(config, certificate, None, None, None, {"error": "X"})
    assert failing["hypotheses"]["passed"]
    assert failing["verdict"] is False
    assert failing["family_report"] is None
    assert exit_code(failing) == 2
