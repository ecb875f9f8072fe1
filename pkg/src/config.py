"""
This module contains the run configuration: one flat, JSON-serializable
record of everything a command needs, read from a file and overridden
key by key from the command line.
"""

import json
from dataclasses import asdict, dataclass, fields
from typing import Any, Dict, Optional, Union

from .errors import ConfigError
from .exterior_algebra import COMASS_ASCENT_ITERS, COMASS_SAMPLES
from .reifenberg_builder import BLEND_FACTOR, FIT_MODES, MAX_GRID_NODES
from .measure_calibration import DEFAULT_C_LOWER, DEFAULT_C_UPPER

COMMANDS = ("analyze", "build", "certify", "generate", "comass")
LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR")


@dataclass
class RunConfig:
    """
    Configuration of one run.

    Attributes:
        command: One of COMMANDS.
        input: CSV cloud to read.
        output: Directory the artifacts are written to.
        k: Intrinsic dimension of the cloud.
        n: Ambient dimension, checked against the cloud when given.
        delta: Flatness bound of the verdict.
        alpha: Positivity bound of the verdict.
        epsilon: Outer scale of the surface construction.
        form: Calibrating form: a standard form name, a dict
            {"name": ..., "params": {...}}, or a path to a form JSON file.
            The volume form e^{1..k} by default.
        field_epsilon: Recorded bound on the field perturbation.
        perturbation_amplitude: Amplitude of a seeded sinusoidal
            perturbation of the field; 0 for a constant field.
        j_min: Coarsest dyadic exponent.
        j_max: Finest dyadic exponent.
        domain_radius: Radius of the domain ball.
        net_fraction: Net covering radius as a fraction of the scale.
        max_centers: Cap on the centers per scale.
        levels: Last level index of the surface family.
        grid_spacing: Surface grid spacing, derived when omitted.
        max_grid_nodes: Cap on the surface grid size.
        fit_mode: Cover plane fitting, "symmetric" or "pca".
        blend: Bump support factor of the gluing.
        seed: Seed of every random choice.
        workers: Worker pool width.
        c_lower: Constant of the lower Ahlfors bound.
        c_upper: Constant of the upper Ahlfors bound.
        comass_samples: Random frames of the comass estimate.
        comass_iters: Ascent iterations of the comass estimate.
        generator: Generator spec of the generate command.
        log_level: Logging level name.
        log_file: Log to this file instead of stderr.
    """

    command: Optional[str] = None
    input: Optional[str] = None
    output: str = "data"
    k: Optional[int] = None
    n: Optional[int] = None
    delta: float = 0.05
    alpha: float = 0.9
    epsilon: float = 0.5
    form: Optional[Union[str, Dict[str, Any]]] = None
    field_epsilon: float = 0.0
    perturbation_amplitude: float = 0.0
    j_min: int = 0
    j_max: int = 6
    domain_radius: float = 2.0
    net_fraction: float = 0.5
    max_centers: int = 64
    levels: int = 4
    grid_spacing: Optional[float] = None
    max_grid_nodes: int = MAX_GRID_NODES
    fit_mode: str = "symmetric"
    blend: float = BLEND_FACTOR
    seed: int = 0
    workers: int = 1
    c_lower: float = DEFAULT_C_LOWER
    c_upper: float = DEFAULT_C_UPPER
    comass_samples: int = COMASS_SAMPLES
    comass_iters: int = COMASS_ASCENT_ITERS
    generator: Optional[Dict[str, Any]] = None
    log_level: str = "INFO"
    log_file: Optional[str] = None

    def validate(self):
        if self.command is not None and self.command not in COMMANDS:
            raise ConfigError(f"unknown command {self.command!r}")
        if self.fit_mode not in FIT_MODES:
            raise ConfigError(f"fit_mode must be one of {FIT_MODES}")
        if self.log_level.upper() not in LOG_LEVELS:
            raise ConfigError(f"log_level must be one of {LOG_LEVELS}")
        if self.workers < 1:
            raise ConfigError("workers must be at least 1")
        if self.j_max < self.j_min:
            raise ConfigError("j_max must not be below j_min")
        if self.epsilon <= 0 or self.levels < 0:
            raise ConfigError("epsilon must be positive and levels nonnegative")
        if self.field_epsilon < 0 or self.perturbation_amplitude < 0:
            raise ConfigError("field epsilon and perturbation amplitude must be nonnegative")

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "RunConfig":
        """
        Build a config from a dictionary.

        Raises:
            ConfigError: On keys that are not configuration fields or
                values that fail validation.
        """
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"unknown configuration keys: {unknown}")
        config = cls(**data)
        config.validate()
        return config

    @classmethod
    def from_file(cls, file_path: str) -> "RunConfig":
        try:
            with open(file_path, mode="r") as file:
                data = json.load(file)
        except (OSError, json.JSONDecodeError) as error:
            raise ConfigError(f"cannot read configuration {file_path}: {error}") from None
        if not isinstance(data, dict):
            raise ConfigError(f"{file_path} does not hold a JSON object")
        return cls.from_dict(data)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    def merged(self, overrides: Dict[str, Any]) -> "RunConfig":
        """A copy with every non-None override applied."""
        data = self.to_dict()
        data.update({key: value for key, value in overrides.items() if value is not None})
        return RunConfig.from_dict(data)
