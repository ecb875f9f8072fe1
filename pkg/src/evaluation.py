"""
This module contains functions composing the verdict document of a
certification run.

The document keeps two sections apart: the hypotheses (flatness and
positivity of the sample set at every certified scale) and the
conclusions (properties of the surface family and the volume bounds).
Entries of kind "pass" decide the verdict; entries of kind "flag" are
reported without deciding it.
"""

from typing import Any, Dict, List, Optional, Tuple

from .flatness import ReifenbergCertificate
from .measure_calibration import CalibrationBounds
from .reifenberg_builder import FamilyReport

PASS = "pass"
FLAG = "flag"


def _entry(
    name: str,
    passed: bool,
    value: Any = None,
    bound: Any = None,
    kind: str = PASS,
) -> Dict[str, Any]:
    return {"name": name, "passed": bool(passed), "value": value, "bound": bound, "kind": kind}


def _section(entries: List[Dict[str, Any]], **extra: Any) -> Dict[str, Any]:
    section = {
        "passed": all(entry["passed"] for entry in entries if entry["kind"] == PASS),
        "entries": entries,
    }
    section.update(extra)
    return section


def hypothesis_section(
    certificate: ReifenbergCertificate,
    delta: float,
    alpha: float,
) -> Dict[str, Any]:
    """
    Check the flatness and positivity hypotheses on a certificate.

    Parameters:
        certificate: The multiscale certificate.
        delta: Flatness bound; every theta must lie below it.
        alpha: Positivity bound; every calibration value must exceed it.

    Returns:
        The section, with the failing balls listed.
    """
    with_slack = certificate.delta_star_with_slack()
    ambiguous = sum(record.ambiguous for record in certificate.records)
    degenerate = sum(record.degenerate for record in certificate.records)
    entries = [
        _entry("flatness", certificate.delta_star < delta, certificate.delta_star, delta),
        _entry("positivity", certificate.alpha_star > alpha, certificate.alpha_star, alpha),
        _entry("flatness_with_net_slack", with_slack < delta, with_slack, delta, FLAG),
        _entry("dini_sum", True, certificate.dini_max, None, FLAG),
        _entry("ambiguous_orientations", ambiguous == 0, ambiguous, 0, FLAG),
        _entry("degenerate_balls", degenerate == 0, degenerate, 0, FLAG),
    ]
    failing = [
        {"x": [float(v) for v in record.x], "r": record.r,
         "theta": record.theta, "omega_value": record.omega_value}
        for record in certificate.failing(delta, alpha)
    ]
    return _section(entries, failing=failing)


def conclusion_section(
    family_report: Optional[FamilyReport],
    bounds: Optional[CalibrationBounds],
    covering: Optional[Tuple[bool, float]],
    error: Optional[Dict[str, Any]] = None,
) -> Dict[str, Any]:
    """
    Collect the surface family properties and volume bounds.

    Parameters:
        family_report: Property checks of the family.
        bounds: Calibration bounds per level.
        covering: Result of the projection covering check.
        error: Diagnostic of a construction that could not run.

    Returns:
        The section; it fails when the construction could not run.
    """
    if error is not None or family_report is None or bounds is None or covering is None:
        return {"passed": False, "entries": [], "error": error}

    levels = family_report.levels
    positivity = [level.positivity_fraction for level in levels if level.positivity_fraction is not None]
    injectivity = sum(level.injectivity_violations for level in levels)
    reports = bounds.reports

    entries = [
        _entry("construction_completed", not family_report.aborted, len(levels)),
        _entry(
            "outside_equals_base_plane",
            all(level.outside_exact for level in levels),
        ),
        _entry(
            "orientation_positivity",
            all(fraction == 1.0 for fraction in positivity),
            min(positivity, default=None),
            1.0,
        ),
        _entry(
            "vitali_fifth_balls_disjoint",
            all(level.fifth_balls_disjoint for level in levels),
        ),
        _entry("cover_covers_cloud", all(level.covers_cloud for level in levels)),
        _entry("closedness", bounds.closed, bounds.base_integrals),
        _entry("mass_bound", all(report.mass_bound_ok for report in reports)),
        _entry(
            "positivity_transfer",
            all(report.positivity_ok for report in reports),
            min((report.positivity_min for report in reports), default=None),
        ),
        _entry("projection_covering", covering[0], covering[1], 1.0),
    ]
    for quantity in ("hausdorff_ratio", "grassmann_drift", "velocity"):
        entries.append(
            _entry(
                f"{quantity}_constant_stable",
                family_report.stable[quantity],
                family_report.constants[quantity],
                kind=FLAG,
            )
        )
    entries.extend(
        [
            _entry("monotone_refinement", family_report.monotone_refinement, kind=FLAG),
            _entry("injectivity", injectivity == 0, injectivity, 0, FLAG),
            _entry(
                "ahlfors_bounds",
                all(report.within_bounds for report in reports),
                [report.ahlfors_ratio for report in reports],
                {
                    "required_c_lower": max(r.required_c_lower for r in reports),
                    "required_c_upper": max(r.required_c_upper for r in reports),
                },
                FLAG,
            ),
            _entry("limit_measure", bounds.limit_measure is not None, bounds.limit_measure, kind=FLAG),
        ]
    )
    return _section(entries)


def verdict_document(
    config: Dict[str, Any],
    certificate: ReifenbergCertificate,
    family_report: Optional[FamilyReport],
    bounds: Optional[CalibrationBounds],
    covering: Optional[Tuple[bool, float]],
    error: Optional[Dict[str, Any]] = None,
) -> Dict[str, Any]:
    """
    Compose the verdict document of a certify run.

    The verdict is true when both the hypothesis and the conclusion
    sections pass.
    """
    hypotheses = hypothesis_section(certificate, config["delta"], config["alpha"])
    conclusions = conclusion_section(family_report, bounds, covering, error)
    return {
        "config": config,
        "certificate": certificate.to_json(),
        "hypotheses": hypotheses,
        "conclusions": conclusions,
        "family_report": None if family_report is None else family_report.to_json(),
        "calibration_bounds": None if bounds is None else bounds.to_json(),
        "verdict": hypotheses["passed"] and conclusions["passed"],
    }


def exit_code(document: Dict[str, Any]) -> int:
    """0 for a true verdict, 2 for a false one."""
    return 0 if document["verdict"] else 2
