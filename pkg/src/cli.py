"""
This module contains the command-line front-end.

Commands:
    analyze   multiscale flatness certificate of a cloud
    build     surface family of a cloud and its property report
    certify   both of the above plus the volume bounds, as one verdict
    generate  a ground-truth cloud and its metadata
    comass    comass estimate of a form

Exit status is 0 for a true verdict, 2 for a false one and 1 for an
error; errors are described by a JSON object on stderr.
"""

import argparse
import json
import logging
import os
import sys
from typing import Any, Dict, List, Optional

from .config import COMMANDS, RunConfig
from .display_profile import Drawer
from .errors import ConfigError, ContractViolationError, ReifenbergError
from .evaluation import exit_code, verdict_document
from .exterior_algebra import (
    CalibrationField,
    ConstantKForm,
    SinusoidalPerturbation,
    comass,
)
from .flatness import NetPolicy, ScalePolicy, certify
from .generators import GeneratorSpec, generate
from .geometry_core import PointCloud
from .measure_calibration import calibration_bounds_check, projection_covering_check
from .reifenberg_builder import ReifenbergBuilder, SurfaceFamily, check_properties
from .standard_forms import form_by_name, volume_form
from .state_loader import load_cloud_csv, load_json
from .state_saver import (
    dump_json,
    save_cloud_csv,
    save_json,
    save_rows_csv,
    save_surface_csv,
    save_surface_ply,
)

logger = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"
ERROR_EXIT = 1

# Flags shared by every command, as (name, type, help)
FLAGS = [
    ("input", str, "CSV cloud to read"),
    ("output", str, "directory for the artifacts"),
    ("k", int, "intrinsic dimension"),
    ("n", int, "ambient dimension"),
    ("delta", float, "flatness bound"),
    ("alpha", float, "positivity bound"),
    ("epsilon", float, "outer scale of the surface construction"),
    ("form", str, "standard form name, JSON object with name and params, or form JSON file"),
    ("field_epsilon", float, "bound on the field perturbation"),
    ("perturbation_amplitude", float, "amplitude of a sinusoidal field perturbation"),
    ("j_min", int, "coarsest dyadic exponent"),
    ("j_max", int, "finest dyadic exponent"),
    ("domain_radius", float, "radius of the domain ball"),
    ("net_fraction", float, "net covering radius over scale"),
    ("max_centers", int, "centers per scale"),
    ("levels", int, "last surface level"),
    ("grid_spacing", float, "surface grid spacing"),
    ("max_grid_nodes", int, "cap on the surface grid size"),
    ("fit_mode", str, "cover plane fitting: symmetric or pca"),
    ("blend", float, "bump support factor"),
    ("seed", int, "random seed"),
    ("workers", int, "worker pool width"),
    ("c_lower", float, "constant of the lower Ahlfors bound"),
    ("c_upper", float, "constant of the upper Ahlfors bound"),
    ("comass_samples", int, "random frames of the comass estimate"),
    ("comass_iters", int, "ascent iterations of the comass estimate"),
    ("log_level", str, "logging level"),
    ("log_file", str, "log file instead of stderr"),
]


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON configuration file; flags override it")
    common.add_argument("--generator", help="generator spec as a JSON object or file")
    for name, kind, text in FLAGS:
        common.add_argument(f"--{name.replace('_', '-')}", dest=name, type=kind, help=text)

    parser = argparse.ArgumentParser(
        prog="main.py",
        description="Almost-calibrated Reifenberg certification toolkit",
    )
    commands = parser.add_subparsers(dest="command", required=True)
    for command in COMMANDS:
        commands.add_parser(command, parents=[common])
    return parser


def parse_config(argv: List[str]) -> RunConfig:
    """Read the configuration file, if any, and apply the flags over it."""
    args = vars(build_parser().parse_args(argv))
    config_path = args.pop("config")
    config = RunConfig.from_file(config_path) if config_path else RunConfig()

    generator = args.pop("generator")
    if generator is not None:
        if os.path.isfile(generator):
            args["generator"] = load_json(generator)
        else:
            try:
                args["generator"] = json.loads(generator)
            except json.JSONDecodeError as error:
                raise ConfigError(f"generator is neither a file nor JSON: {error}") from None

    form = args.get("form")
    if form is not None and form.lstrip().startswith("{"):
        try:
            args["form"] = json.loads(form)
        except json.JSONDecodeError as error:
            raise ConfigError(f"form is not valid JSON: {error}") from None
    return config.merged(args)


def setup_logging(config: RunConfig):
    target: Dict[str, Any] = (
        {"filename": config.log_file} if config.log_file else {"stream": sys.stderr}
    )
    logging.basicConfig(
        level=getattr(logging, config.log_level.upper()),
        format=LOG_FORMAT,
        force=True,
        **target,
    )


def resolve_form(
    config: RunConfig,
    n: Optional[int] = None,
    k: Optional[int] = None,
) -> ConstantKForm:
    """
    The configured form: a standard form name, a name with parameters, or
    a form JSON file. Without a configured form the volume form e^{1..k}
    is used; its type is checked against (n, k) when they are given.
    """
    spec = config.form
    if spec is None:
        if n is None or k is None:
            raise ConfigError("a form is required")
        form = volume_form(n, k)
    elif isinstance(spec, dict):
        form = form_by_name(spec["name"], **spec.get("params", {}))
    elif spec.endswith(".json"):
        form = ConstantKForm.from_json(load_json(spec))
    else:
        form = form_by_name(spec)
    if n is not None and k is not None and (form.n, form.k) != (n, k):
        raise ContractViolationError(
            f"form of type ({form.n}, {form.k}) does not match a {k}-dimensional cloud in R^{n}"
        )
    return form


def make_field(config: RunConfig, n: int, k: int) -> CalibrationField:
    constant = resolve_form(config, n, k)
    if config.perturbation_amplitude > 0:
        perturbation = SinusoidalPerturbation.random(
            n, k, config.perturbation_amplitude, seed=config.seed
        )
        epsilon = max(config.field_epsilon, config.perturbation_amplitude)
        return CalibrationField(constant, epsilon, perturbation, seed=config.seed)
    return CalibrationField(constant, config.field_epsilon)


def load_cloud(config: RunConfig) -> PointCloud:
    if config.input is None:
        raise ConfigError("this command needs an input cloud")
    if config.k is None:
        raise ConfigError("the intrinsic dimension k is required")
    cloud = PointCloud.build(load_cloud_csv(config.input), config.k)
    if config.n is not None and config.n != cloud.n:
        raise ContractViolationError(f"expected a cloud in R^{config.n}, got R^{cloud.n}")
    return cloud


def _output(config: RunConfig, name: str) -> str:
    return os.path.join(config.output, name)


def _run_certificate(config: RunConfig, cloud: PointCloud, field: CalibrationField):
    return certify(
        cloud,
        field,
        ScalePolicy(config.j_min, config.j_max, config.domain_radius),
        NetPolicy(config.net_fraction, config.max_centers),
        delta=config.delta,
        alpha=config.alpha,
        workers=config.workers,
    )


def _run_family(config: RunConfig, cloud: PointCloud, field: CalibrationField) -> SurfaceFamily:
    builder = ReifenbergBuilder(
        cloud,
        config.epsilon,
        config.levels,
        field,
        fit_mode=config.fit_mode,
        grid_spacing=config.grid_spacing,
        max_grid_nodes=config.max_grid_nodes,
        blend=config.blend,
        workers=config.workers,
        state_path=_output(config, "builder_state.jsonl"),
    )
    return builder.run()


def _export_surface(config: RunConfig, family: SurfaceFamily):
    surface = family.final
    save_surface_csv(surface.grid_coordinates, surface.positions, _output(config, "surface.csv"))
    if surface.k == 2:
        save_surface_ply(surface.positions, surface.shape, _output(config, "surface.ply"))


def run_analyze(config: RunConfig) -> int:
    cloud = load_cloud(config)
    certificate = _run_certificate(config, cloud, make_field(config, cloud.n, cloud.k))
    save_json(certificate.to_json(), _output(config, "certificate.json"))
    save_rows_csv(certificate.profile(), _output(config, "profile.csv"))
    Drawer(delta=config.delta, alpha=config.alpha).draw(
        certificate.profile(), _output(config, "profile.svg")
    )
    verdict = certificate.verdict(config.delta, config.alpha)
    print(f"delta* = {certificate.delta_star:.6g}, alpha* = {certificate.alpha_star:.6g}")
    print(f"Verdict: {verdict}")
    return 0 if verdict else 2


def run_build(config: RunConfig) -> int:
    cloud = load_cloud(config)
    field = make_field(config, cloud.n, cloud.k)
    family = _run_family(config, cloud, field)
    report = check_properties(family, cloud, field)
    save_json(report.to_json(), _output(config, "family_report.json"))
    _export_surface(config, family)
    print(f"Built {len(family.surfaces)} levels, aborted: {family.aborted}")
    print(f"Constants: {report.constants}")
    return 2 if family.aborted else 0


def run_certify(config: RunConfig) -> int:
    cloud = load_cloud(config)
    field = make_field(config, cloud.n, cloud.k)
    certificate = _run_certificate(config, cloud, field)

    family_report, bounds, covering, error = None, None, None, None
    try:
        family = _run_family(config, cloud, field)
        family_report = check_properties(family, cloud, field, delta=certificate.delta_star)
        bounds = calibration_bounds_check(
            family, field, config.alpha, certificate.delta_star,
            c_lower=config.c_lower, c_upper=config.c_upper,
        )
        covering = projection_covering_check(
            family.final, family.base_plane, certificate.delta_star, config.c_lower
        )
        _export_surface(config, family)
    except ReifenbergError as failure:
        logger.error("surface construction failed: %s", failure)
        error = failure.diagnostic()

    document = verdict_document(
        config.to_dict(), certificate, family_report, bounds, covering, error
    )
    save_json(document, _output(config, "verdict.json"))
    print(f"Hypotheses: {document['hypotheses']['passed']}")
    print(f"Conclusions: {document['conclusions']['passed']}")
    print(f"Verdict: {document['verdict']}")
    return exit_code(document)


def run_generate(config: RunConfig) -> int:
    if config.generator is None:
        raise ConfigError("generate needs a generator spec")
    spec = GeneratorSpec.from_dict(config.generator)
    cloud, truth = generate(spec)
    save_cloud_csv(
        cloud.points,
        _output(config, "cloud.csv"),
        comments=[f"kind={spec.kind} n={cloud.n} k={cloud.k}"],
    )
    metadata = {
        "spec": spec.to_dict(),
        "n": cloud.n,
        "k": cloud.k,
        "points": len(cloud),
        "resolution": cloud.resolution,
        "truth": truth.to_json(),
    }
    save_json(metadata, _output(config, "cloud.json"))
    print(f"Generated {len(cloud)} points in R^{cloud.n}, resolution {cloud.resolution:.4g}")
    return 0


def run_comass(config: RunConfig) -> int:
    form = resolve_form(config)
    value = comass(
        form,
        samples=config.comass_samples,
        ascent_iters=config.comass_iters,
        seed=config.seed,
        workers=config.workers,
    )
    report = {
        "form": form.to_json(),
        "comass": value,
        "samples": config.comass_samples,
        "ascent_iters": config.comass_iters,
        "seed": config.seed,
    }
    save_json(report, _output(config, "comass.json"))
    print(f"Comass estimate: {value:.12g}")
    return 0


RUNNERS = {
    "analyze": run_analyze,
    "build": run_build,
    "certify": run_certify,
    "generate": run_generate,
    "comass": run_comass,
}


def run(config: RunConfig) -> int:
    """
    Run one command.

    Parameters:
        config: The full configuration; config.command selects the runner.

    Returns:
        The exit status.
    """
    try:
        if config.command not in RUNNERS:
            raise ConfigError(f"unknown command {config.command!r}")
        return RUNNERS[config.command](config)
    except (ReifenbergError, OSError) as error:
        report_error(error)
        return ERROR_EXIT


def report_error(error: Exception):
    if isinstance(error, ReifenbergError):
        diagnostic = error.diagnostic()
    else:
        diagnostic = {"error": type(error).__name__, "message": str(error), "diagnostic": {}}
    sys.stderr.write(dump_json(diagnostic))


def main(argv: Optional[List[str]] = None) -> int:
    try:
        config = parse_config(sys.argv[1:] if argv is None else argv)
    except ReifenbergError as error:
        report_error(error)
        return ERROR_EXIT
    setup_logging(config)
    logger.info("running %s", config.command)
    return run(config)
