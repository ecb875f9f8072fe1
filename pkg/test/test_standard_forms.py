"""
Unit tests for standard_forms module.
"""

import numpy as np
import pytest

from src.errors import ContractViolationError
from src.exterior_algebra import OrientedPlane, comass, evaluate, permutation_sign
from src.standard_forms import (
    G2_COASSOCIATIVE_MONOMIALS,
    SPIN7_MONOMIALS,
    complex_frame,
    coordinate_plane_values,
    form_by_name,
    g2_associative,
    g2_coassociative,
    kahler_power,
    special_lagrangian,
    spin7_form,
    volume_form,
)


# volume_form tests
def test_volume_form_terms():
    """Tests if the volume form has the single first monomial."""
    assert volume_form(3, 2).terms() == {(1, 2): 1.0}


# kahler_power tests
def test_kahler_on_complex_line():
    """Tests if the Kahler form is one on a complex line."""
    vector = np.array([1.0, 2.0j]) / np.sqrt(5.0)
    frame = complex_frame(vector[None, :])
    assert np.allclose(frame @ frame.T, np.eye(2))
    assert kahler_power(2, 1).evaluate_frame(frame) == pytest.approx(1.0)


def test_kahler_square_on_full_space():
    """Tests if the normalized square is one on C^2 itself."""
    frame = complex_frame(np.eye(2, dtype=complex))
    assert kahler_power(2, 2).evaluate_frame(frame) == pytest.approx(1.0)


def test_kahler_on_real_plane():
    """Tests if the Kahler form vanishes on a Lagrangian plane."""
    assert evaluate(kahler_power(2, 1), OrientedPlane.coordinate(4, (1, 3))) == pytest.approx(0.0)


def test_kahler_power_out_of_range():
    """Tests if a power above the complex dimension is rejected."""
    with pytest.raises(ContractViolationError):
        kahler_power(2, 3)


# special_lagrangian tests
def test_special_lagrangian_on_real_plane():
    """Tests if the real n-plane is calibrated at phase zero."""
    form = special_lagrangian(2)
    assert evaluate(form, OrientedPlane.coordinate(4, (1, 3))) == pytest.approx(1.0)
    assert form.coefficient((2, 4)) == pytest.approx(-1.0)


def test_special_lagrangian_rotated_phase():
    """Tests if phase pi/2 calibrates the line spanned by -e_y."""
    form = special_lagrangian(1, np.pi / 2)
    assert evaluate(form, OrientedPlane.coordinate(2, (2,)).flipped()) == pytest.approx(1.0)
    assert evaluate(form, OrientedPlane.coordinate(2, (1,))) == pytest.approx(0.0)


def test_special_lagrangian_comass():
    """Tests if the special Lagrangian form has comass one."""
    value = comass(special_lagrangian(2), samples=300, ascent_iters=100)
    assert 0.99 <= value <= 1.0 + 1e-9


# exceptional forms tests
def test_associative_on_first_plane():
    """Tests if the associative form is one on span(e1, e2, e3)."""
    assert evaluate(g2_associative(), OrientedPlane.coordinate(7, (1, 2, 3))) == pytest.approx(1.0)


def test_coassociative_coordinate_values():
    """Tests if every monomial appears with its parity sign."""
    values = coordinate_plane_values(g2_coassociative())
    for coeff, digits in G2_COASSOCIATIVE_MONOMIALS:
        indices = tuple(int(d) for d in digits)
        assert values[tuple(sorted(indices))] == pytest.approx(
            coeff * permutation_sign(indices)
        )
    assert sum(1 for value in values.values() if value != 0.0) == 7


def test_spin7_has_fourteen_terms():
    """Tests if the Cayley form has fourteen unit monomials."""
    terms = spin7_form().terms()
    assert len(terms) == len(SPIN7_MONOMIALS) == 14
    assert all(abs(value) == 1.0 for value in terms.values())


def test_spin7_coordinate_values():
    """Tests the Cayley form on coordinate planes of either sign."""
    form = spin7_form()
    assert evaluate(form, OrientedPlane.coordinate(8, (1, 2, 5, 6))) == pytest.approx(1.0)
    assert evaluate(form, OrientedPlane.coordinate(8, (2, 3, 5, 8))) == pytest.approx(-1.0)
    assert evaluate(form, OrientedPlane.coordinate(8, (1, 2, 3, 4))) == pytest.approx(1.0)


def test_associative_negative_plane():
    """Tests if the associative form is minus one on span(e1, e6, e7)."""
    form = g2_associative()
    assert evaluate(form, OrientedPlane.coordinate(7, (1, 6, 7))) == pytest.approx(-1.0)
    assert evaluate(form, OrientedPlane.coordinate(7, (1, 7, 6))) == pytest.approx(1.0)


def test_associative_comass_bound():
    """Tests if no sampled plane exceeds one on the associative form."""
    assert comass(g2_associative(), samples=200, ascent_iters=20) <= 1.0 + 1e-9


# form_by_name tests
def test_form_by_name():
    """Tests if a named lookup forwards its parameters."""
    form = form_by_name("kahler_power", n_complex=2, k=1)
    assert np.allclose(form.values, kahler_power(2, 1).values)


def test_form_by_unknown_name():
    """Tests if an unknown name is rejected."""
    with pytest.raises(ContractViolationError):
        form_by_name("hyperkahler")


def test_form_by_name_bad_parameters():
    """Tests if unexpected constructor arguments are rejected."""
    with pytest.raises(ContractViolationError):
        form_by_name("spin7", n=8)
