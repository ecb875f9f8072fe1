"""
This module contains constructors for the standard calibrations: the
coordinate volume form, normalized Kahler powers, the special Lagrangian
form and the exceptional G2 and Spin(7) forms.

On C^n = R^{2n} the real coordinates are interleaved, so the real and
imaginary parts of z^j are the coordinates 2j-1 and 2j (1-based).
"""

import itertools
import logging
import math
from typing import Any, Callable, Dict, List, Tuple

import numpy as np

from .errors import ContractViolationError
from .exterior_algebra import ConstantKForm, multi_indices

logger = logging.getLogger(__name__)

G2_ASSOCIATIVE_MONOMIALS: List[Tuple[float, str]] = [
    (1.0, "123"),
    (-1.0, "167"),
    (-1.0, "527"),
    (-1.0, "563"),
    (-1.0, "415"),
    (-1.0, "426"),
    (-1.0, "437"),
]

G2_COASSOCIATIVE_MONOMIALS: List[Tuple[float, str]] = [
    (1.0, "4567"),
    (-1.0, "4523"),
    (-1.0, "4163"),
    (-1.0, "4127"),
    (-1.0, "2637"),
    (-1.0, "1537"),
    (-1.0, "1526"),
]

SPIN7_MONOMIALS: List[Tuple[float, str]] = [
    (1.0, "1256"),
    (1.0, "1278"),
    (1.0, "3456"),
    (1.0, "3478"),
    (1.0, "1357"),
    (-1.0, "1368"),
    (-1.0, "2457"),
    (1.0, "2468"),
    (-1.0, "1458"),
    (-1.0, "1467"),
    (-1.0, "2358"),
    (-1.0, "2367"),
    (1.0, "1234"),
    (1.0, "5678"),
]

# Real and imaginary parts of i^m, m mod 4
_I_POWER_REAL = (1.0, 0.0, -1.0, 0.0)
_I_POWER_IMAG = (0.0, 1.0, 0.0, -1.0)


def real_coordinate(j: int) -> int:
    """1-based real coordinate of Re z^j."""
    return 2 * j - 1


def imaginary_coordinate(j: int) -> int:
    """1-based real coordinate of Im z^j."""
    return 2 * j


def volume_form(n: int, k: int) -> ConstantKForm:
    """
    The form e^{1...k}, calibrating the first coordinate k-plane.

    Parameters:
        n: Ambient dimension.
        k: Degree.

    Returns:
        The volume form of span(e_1, ..., e_k).
    """
    return ConstantKForm.from_terms(n, k, {tuple(range(1, k + 1)): 1.0})


def kahler_power(n_complex: int, k: int) -> ConstantKForm:
    """
    Normalized power omega^k / k! of the standard Kahler form on C^n.

    Since the 2-forms dx^j ^ dy^j commute, omega^k / k! is the sum over
    k-subsets J of the wedge of dx^j ^ dy^j over j in J, each with
    coefficient one. Complex k-planes evaluate to exactly 1.

    Parameters:
        n_complex: Complex dimension n.
        k: Complex degree, 1 <= k <= n.

    Returns:
        A 2k-form on R^{2n}.
    """
    if not 1 <= k <= n_complex:
        raise ContractViolationError(
            f"Kahler power {k} out of range for complex dimension {n_complex}"
        )
    terms: Dict[Tuple[int, ...], float] = {}
    for subset in itertools.combinations(range(1, n_complex + 1), k):
        index = tuple(
            coord
            for j in subset
            for coord in (real_coordinate(j), imaginary_coordinate(j))
        )
        terms[index] = 1.0
    return ConstantKForm.from_terms(2 * n_complex, 2 * k, terms)


def special_lagrangian(n_complex: int, phase: float = 0.0) -> ConstantKForm:
    """
    Re(e^{i phase} dz^1 ^ ... ^ dz^n) on R^{2n}.

    Expanding dz^j = dx^j + i dy^j, the monomial picking dy^j for the m
    indices in T and dx^j elsewhere has coefficient Re(e^{i phase} i^m).

    Parameters:
        n_complex: Complex dimension n >= 1.
        phase: Rotation of the complex volume form.

    Returns:
        An n-form on R^{2n}.
    """
    if n_complex < 1:
        raise ContractViolationError("complex dimension must be positive")
    cos_phase, sin_phase = math.cos(phase), math.sin(phase)
    terms: Dict[Tuple[int, ...], float] = {}
    for choice in itertools.product((False, True), repeat=n_complex):
        m = sum(choice) % 4
        coeff = cos_phase * _I_POWER_REAL[m] - sin_phase * _I_POWER_IMAG[m]
        if coeff == 0.0:
            continue
        index = tuple(
            imaginary_coordinate(j) if imaginary else real_coordinate(j)
            for j, imaginary in enumerate(choice, start=1)
        )
        terms[index] = coeff
    return ConstantKForm.from_terms(2 * n_complex, n_complex, terms)


def g2_associative() -> ConstantKForm:
    """The associative 3-form psi_0 on R^7."""
    return ConstantKForm.from_monomials(7, G2_ASSOCIATIVE_MONOMIALS)


def g2_coassociative() -> ConstantKForm:
    """The coassociative 4-form on R^7."""
    return ConstantKForm.from_monomials(7, G2_COASSOCIATIVE_MONOMIALS)


def spin7_form() -> ConstantKForm:
    """The Cayley 4-form on R^8."""
    return ConstantKForm.from_monomials(8, SPIN7_MONOMIALS)


def complex_frame(vectors: np.ndarray) -> np.ndarray:
    """
    Real frame (v_1, i v_1, ..., v_k, i v_k) of a complex k-plane.

    Parameters:
        vectors: Complex array of shape (k, n).

    Returns:
        Real array of shape (2k, 2n) in interleaved coordinates, carrying
        the complex orientation.
    """
    vectors = np.atleast_2d(np.asarray(vectors, dtype=complex))
    k, n = vectors.shape
    frame = np.zeros((2 * k, 2 * n))
    for row, vector in enumerate(vectors):
        for image, value in ((2 * row, vector), (2 * row + 1, 1j * vector)):
            frame[image, 0::2] = value.real
            frame[image, 1::2] = value.imag
    return frame


FORM_CONSTRUCTORS: Dict[str, Callable[..., ConstantKForm]] = {
    "volume": volume_form,
    "kahler_power": kahler_power,
    "special_lagrangian": special_lagrangian,
    "g2_associative": g2_associative,
    "g2_coassociative": g2_coassociative,
    "spin7": spin7_form,
}


def form_by_name(name: str, **params: Any) -> ConstantKForm:
    """
    Look up a standard form.

    Parameters:
        name: One of FORM_CONSTRUCTORS.
        **params: Constructor arguments, e.g. n_complex=2, k=1.

    Returns:
        The form.
    """
    try:
        constructor = FORM_CONSTRUCTORS[name]
    except KeyError:
        raise ContractViolationError(
            f"unknown form {name!r}; expected one of {sorted(FORM_CONSTRUCTORS)}"
        ) from None
    try:
        return constructor(**params)
    except TypeError as error:
        raise ContractViolationError(f"bad parameters for {name}: {error}") from None


def coordinate_plane_values(form: ConstantKForm) -> Dict[Tuple[int, ...], float]:
    """
    Values of a form on every increasing coordinate k-plane.

    Returns:
        Map from multi-index to the value on span(e_i for i in it).
    """
    identity = np.eye(form.n)
    return {
        index: form.evaluate_frame(identity[[i - 1 for i in index]])
        for index in multi_indices(form.n, form.k)
    }
