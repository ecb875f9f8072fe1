"""
Module for plotting the multiscale flatness profile.

The plot shows, per certified scale on a logarithmic axis, the worst
two-sided flatness, the worst one-sided flatness and the smallest
calibration value, with the verdict bounds as horizontal lines.
"""

import logging
import os
from typing import Dict, List, Optional

import matplotlib  # type: ignore

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # type: ignore  # noqa: E402

from .state_loader import load_json  # noqa: E402

logger = logging.getLogger(__name__)

DEFAULT_FIGURE_SIZE = (6.4, 4.8)
THETA_COLOR = "tab:blue"
BETA_COLOR = "tab:orange"
OMEGA_COLOR = "tab:green"


class Drawer:
    """
    Class for drawing flatness profiles.
    """

    def __init__(
        self,
        figure_size=DEFAULT_FIGURE_SIZE,
        delta: Optional[float] = None,
        alpha: Optional[float] = None,
    ):
        """
        Initialize the profile drawer.

        Args:
            figure_size: Figure width and height in inches.
            delta: Flatness bound drawn as a dashed line, if given.
            alpha: Positivity bound drawn as a dotted line, if given.
        """
        self.figure_size = figure_size
        self.delta = delta
        self.alpha = alpha

    def draw(self, profile: List[Dict[str, float]], file_path: str):
        """
        Draw a profile and save it as SVG.

        Args:
            profile: Rows with scale, theta_max, beta_max and omega_min.
            file_path: Destination of the SVG file.
        """
        scales = [row["scale"] for row in profile]
        figure, flatness_axis = plt.subplots(figsize=self.figure_size)
        flatness_axis.set_xscale("log", base=2)
        flatness_axis.plot(
            scales, [row["theta_max"] for row in profile], "o-",
            color=THETA_COLOR, label="max theta",
        )
        flatness_axis.plot(
            scales, [row["beta_max"] for row in profile], "s--",
            color=BETA_COLOR, label="max beta_inf",
        )
        if self.delta is not None:
            flatness_axis.axhline(self.delta, color=THETA_COLOR, linestyle=":", label="delta")
        flatness_axis.set_xlabel("scale r")
        flatness_axis.set_ylabel("flatness")

        omega_axis = flatness_axis.twinx()
        omega_axis.plot(
            scales, [row["omega_min"] for row in profile], "^-",
            color=OMEGA_COLOR, label="min Omega",
        )
        if self.alpha is not None:
            omega_axis.axhline(self.alpha, color=OMEGA_COLOR, linestyle=":", label="alpha")
        omega_axis.set_ylabel("calibration value")

        handles, labels = flatness_axis.get_legend_handles_labels()
        more_handles, more_labels = omega_axis.get_legend_handles_labels()
        flatness_axis.legend(handles + more_handles, labels + more_labels, loc="best")
        figure.tight_layout()

        parent = os.path.dirname(file_path)
        if parent and not os.path.isdir(parent):
            os.makedirs(parent)
        figure.savefig(file_path, format="svg")
        plt.close(figure)
        logger.info("profile plot written to %s", file_path)

    def draw_certificate(self, file_path: str, output_path: str):
        """Draw the profile stored in a certificate JSON file."""
        certificate = load_json(file_path)
        if self.delta is None:
            self.delta = certificate.get("delta")
        if self.alpha is None:
            self.alpha = certificate.get("alpha")
        self.draw(certificate["profile"], output_path)
