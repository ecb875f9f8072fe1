"""
Unit tests for exterior_algebra module.
"""

import math

import numpy as np
import pytest

from src.errors import ContractViolationError
from src.exterior_algebra import (
    CalibrationField,
    ConstantKForm,
    OrientedPlane,
    SinusoidalPerturbation,
    comass,
    evaluate,
    multi_indices,
    orthonormalize_rows,
    permutation_sign,
    pullback,
    random_frames,
)
from src.standard_forms import (
    complex_frame,
    g2_associative,
    g2_coassociative,
    kahler_power,
    spin7_form,
    volume_form,
)


# permutation_sign tests
def test_sign_of_identity():
    """Tests if the sorted sequence is even."""
    assert permutation_sign((1, 2, 3, 4)) == 1


def test_sign_of_transposition():
    """Tests if a single swap is odd."""
    assert permutation_sign((2, 1, 3)) == -1
    assert permutation_sign((4, 5, 2, 3)) == 1


def test_sign_of_repeated_entry():
    """Tests if a repeated index gives zero."""
    assert permutation_sign((1, 1, 2)) == 0


# multi_indices tests
def test_multi_indices_count_and_order():
    """Tests if all increasing pairs are listed lexicographically."""
    indices = multi_indices(4, 2)
    assert len(indices) == math.comb(4, 2)
    assert indices[0] == (1, 2)
    assert indices[-1] == (3, 4)
    assert list(indices) == sorted(indices)


def test_multi_indices_bad_degree():
    """Tests if a degree above n is rejected."""
    with pytest.raises(ContractViolationError):
        multi_indices(3, 4)


# ConstantKForm tests
def test_from_monomials_applies_parity():
    """Tests if unsorted monomials are stored with the sorting sign."""
    form = ConstantKForm.from_monomials(3, [(2.0, "213")])
    assert form.coefficient((1, 2, 3)) == -2.0
    assert form.coefficient("213") == 2.0


def test_coefficient_of_repeated_index():
    """Tests if a repeated index reads as zero."""
    form = volume_form(3, 2)
    assert form.coefficient("11") == 0.0


def test_from_terms_rejects_unsorted_index():
    """Tests if from_terms only accepts increasing multi-indices."""
    with pytest.raises(ContractViolationError):
        ConstantKForm.from_terms(3, 2, {(2, 1): 1.0})


def test_wrong_coefficient_count():
    """Tests if a coefficient vector of the wrong size is rejected."""
    with pytest.raises(ContractViolationError):
        ConstantKForm(3, 2, np.zeros(4))


def test_form_arithmetic():
    """Tests if sums and scalar multiples act on the coefficients."""
    form = volume_form(3, 2)
    other = ConstantKForm.from_terms(3, 2, {(2, 3): 1.0})
    total = 2 * form + other - form
    assert total.terms() == {(1, 2): 1.0, (2, 3): 1.0}
    assert (-form).coefficient((1, 2)) == -1.0


def test_mixed_types_cannot_be_added():
    """Tests if forms of different degree cannot be combined."""
    with pytest.raises(ContractViolationError):
        volume_form(3, 2) + volume_form(3, 1)


def test_form_is_alternating():
    """Tests if swapping two vectors negates the value."""
    rng = np.random.default_rng(3)
    form = ConstantKForm(4, 2, rng.standard_normal(6))
    vectors = rng.standard_normal((2, 4))
    assert form.evaluate_frame(vectors[::-1]) == pytest.approx(
        -form.evaluate_frame(vectors)
    )
    assert form.evaluate_frame(np.vstack([vectors[0], vectors[0]])) == pytest.approx(0.0)


def test_form_is_multilinear():
    """Tests if scaling one vector scales the value."""
    rng = np.random.default_rng(4)
    form = ConstantKForm(5, 3, rng.standard_normal(10))
    vectors = rng.standard_normal((3, 5))
    scaled = vectors.copy()
    scaled[1] *= 2.5
    assert form.evaluate_frame(scaled) == pytest.approx(2.5 * form.evaluate_frame(vectors))


def test_form_axioms_on_seeded_cases():
    """Tests alternation and linearity in every slot over many random forms."""
    rng = np.random.default_rng(11)
    for _ in range(50):
        n = int(rng.integers(2, 7))
        k = int(rng.integers(1, n + 1))
        form = ConstantKForm(n, k, rng.standard_normal(math.comb(n, k)))
        vectors = rng.standard_normal((k, n))
        value = form.evaluate_frame(vectors)
        slot = int(rng.integers(k))
        other = rng.standard_normal(n)
        summed = vectors.copy()
        summed[slot] += other
        replaced = vectors.copy()
        replaced[slot] = other
        assert form.evaluate_frame(summed) == pytest.approx(
            value + form.evaluate_frame(replaced), rel=1e-9, abs=1e-9
        )
        if k > 1:
            swapped = vectors.copy()
            swapped[[0, k - 1]] = swapped[[k - 1, 0]]
            assert form.evaluate_frame(swapped) == pytest.approx(-value, rel=1e-9, abs=1e-9)


def test_form_json_round_trip():
    """Tests if a form survives its JSON representation."""
    form = ConstantKForm.from_monomials(7, [(1.0, "4523"), (-0.5, "1234")])
    restored = ConstantKForm.from_json(form.to_json())
    assert np.allclose(restored.values, form.values)


# pullback tests
def test_pullback_of_top_form_is_determinant():
    """Tests if the top form pulls back to det(A) times itself."""
    matrix = np.array([[2.0, 1.0], [0.5, 3.0]])
    pulled = pullback(volume_form(2, 2), matrix)
    assert pulled.coefficient((1, 2)) == pytest.approx(np.linalg.det(matrix))


def test_pullback_through_inclusion():
    """Tests if pulling back through an inclusion restricts the form."""
    inclusion = np.zeros((4, 2))
    inclusion[0, 0] = inclusion[1, 1] = 1.0
    pulled = pullback(volume_form(4, 2), inclusion)
    assert pulled.n == 2
    assert pulled.coefficient((1, 2)) == pytest.approx(1.0)


# OrientedPlane tests
def test_frame_must_be_orthonormal():
    """Tests if a non-orthonormal frame is rejected."""
    with pytest.raises(ContractViolationError):
        OrientedPlane(np.zeros(3), np.array([[1.0, 0.0, 0.0], [1.0, 1.0, 0.0]]))


def test_dependent_vectors_are_rejected():
    """Tests if a degenerate spanning set is rejected."""
    with pytest.raises(ContractViolationError):
        OrientedPlane.from_vectors(np.zeros(3), np.array([[1.0, 2.0, 0.0], [2.0, 4.0, 0.0]]))


def test_from_vectors_keeps_orientation():
    """Tests if Gram-Schmidt keeps the orientation of the vectors."""
    plane = OrientedPlane.from_vectors(np.zeros(3), np.array([[2.0, 0.0, 0.0], [1.0, 3.0, 0.0]]))
    assert evaluate(volume_form(3, 2), plane) == pytest.approx(1.0)


def test_flipped_plane():
    """Tests if flipping reverses the orientation and keeps the subspace."""
    plane = OrientedPlane.coordinate(3, (1, 2))
    flipped = plane.flipped()
    assert not plane.same_orientation(flipped)
    assert np.allclose(plane.projector(), flipped.projector())
    assert evaluate(volume_form(3, 2), flipped) == pytest.approx(-1.0)


def test_coordinate_plane_order():
    """Tests if the axis order is the orientation."""
    assert evaluate(volume_form(3, 2), OrientedPlane.coordinate(3, (2, 1))) == pytest.approx(-1.0)


def test_projector_is_idempotent():
    """Tests if the projector is a symmetric idempotent of rank k."""
    rng = np.random.default_rng(5)
    plane = OrientedPlane.from_vectors(np.zeros(5), rng.standard_normal((2, 5)))
    projector = plane.projector()
    assert np.allclose(projector @ projector, projector)
    assert np.allclose(projector, projector.T)
    assert np.trace(projector) == pytest.approx(2.0)


def test_coordinates_and_embed():
    """Tests if embedding frame coordinates recovers points of the plane."""
    plane = OrientedPlane.coordinate(3, (1, 2), base=np.array([0.0, 0.0, 1.0]))
    point = plane.embed(np.array([0.3, -0.2]))
    assert np.allclose(point, [0.3, -0.2, 1.0])
    assert np.allclose(plane.coordinates(point), [0.3, -0.2])


def test_evaluate_ignores_choice_of_frame():
    """Tests if rotating a frame inside its plane keeps the value."""
    rng = np.random.default_rng(5)
    form = g2_associative()
    frame = random_frames(rng, 1, 7, 3)[0]
    value = form.evaluate_frame(frame)
    for _ in range(20):
        rotation, _ = np.linalg.qr(rng.standard_normal((3, 3)))
        if np.linalg.det(rotation) < 0:
            rotation[:, 0] = -rotation[:, 0]
        assert form.evaluate_frame(rotation @ frame) == pytest.approx(value, abs=1e-10)


def test_evaluate_type_mismatch():
    """Tests if a form cannot be evaluated on a plane of another type."""
    with pytest.raises(ContractViolationError):
        evaluate(volume_form(4, 2), OrientedPlane.coordinate(3, (1, 2)))


# CalibrationField tests
def _constant_perturbation(n, k, amplitude):
    return SinusoidalPerturbation(
        amplitude=amplitude,
        wavevector=np.zeros(n),
        direction=np.eye(math.comb(n, k))[0],
        phase=math.pi / 2,
    )


def test_field_rejects_understated_epsilon():
    """Tests if a perturbation above the recorded epsilon is rejected."""
    with pytest.raises(ContractViolationError):
        CalibrationField(volume_form(3, 2), 0.05, _constant_perturbation(3, 2, 0.1))


def test_field_value_at_point():
    """Tests if the field adds the perturbation to the constant part."""
    field = CalibrationField(volume_form(3, 2), 0.1, _constant_perturbation(3, 2, 0.1))
    assert field.measure_perturbation() == pytest.approx(0.1)
    assert field.at(np.ones(3)).coefficient((1, 2)) == pytest.approx(1.1)
    assert field.evaluate(OrientedPlane.coordinate(3, (1, 2))) == pytest.approx(1.1)


def test_constant_field_localizes_to_itself():
    """Tests if localizing a constant field changes nothing."""
    field = CalibrationField(volume_form(3, 2))
    assert field.localized(np.ones(3), 0.5) is field


def test_localized_field_moves_sample_points():
    """Tests if the localized perturbation is read at center + scale * y."""
    inner = SinusoidalPerturbation.random(3, 2, 0.1, seed=2)
    field = CalibrationField(volume_form(3, 2), 0.1, inner)
    center = np.array([0.5, 0.0, 0.0])
    local = field.localized(center, 0.25)
    y = np.array([0.2, 0.4, -0.1])
    assert np.allclose(local.delta_at(y), inner(center + 0.25 * y))


# comass tests
def test_random_frames_are_orthonormal():
    """Tests if sampled frames have orthonormal rows."""
    frames = random_frames(np.random.default_rng(0), 20, 5, 2)
    grams = np.einsum("mki,mli->mkl", frames, frames)
    assert np.allclose(grams, np.eye(2))


def test_orthonormalize_keeps_span():
    """Tests if orthonormalized rows span the same space."""
    vectors = np.array([[1.0, 1.0, 0.0], [0.0, 2.0, 1.0]])
    frame = orthonormalize_rows(vectors)
    residual = vectors - (vectors @ frame.T) @ frame
    assert np.allclose(residual, 0.0)


def test_comass_of_zero_form():
    """Tests if the zero form has comass exactly zero."""
    assert comass(ConstantKForm.zero(4, 2), samples=50, ascent_iters=5) == 0.0


def test_comass_of_volume_form():
    """Tests if the volume form has comass one."""
    value = comass(volume_form(4, 2), samples=200, ascent_iters=100, batch_size=100)
    assert 0.99 <= value <= 1.0 + 1e-9


def test_comass_scales_linearly():
    """Tests if doubling a form doubles the estimate."""
    value = comass(2.0 * volume_form(3, 2), samples=200, ascent_iters=100)
    assert 1.98 <= value <= 2.0 + 1e-9


def test_comass_of_kahler_form():
    """Tests if the Kahler form has comass one."""
    value = comass(kahler_power(2, 1), samples=300, ascent_iters=100)
    assert 0.99 <= value <= 1.0 + 1e-9


def test_comass_is_seeded():
    """Tests if the estimate is reproducible for a fixed seed."""
    form = ConstantKForm(4, 2, np.arange(1.0, 7.0))
    first = comass(form, samples=100, ascent_iters=10, seed=7, batch_size=30)
    second = comass(form, samples=100, ascent_iters=10, seed=7, batch_size=30)
    assert first == second


def test_comass_grows_with_effort():
    """Tests if more samples or more ascent steps never lower the estimate."""
    form = ConstantKForm(5, 2, np.arange(1.0, 11.0))
    by_samples = [
        comass(form, samples=samples, ascent_iters=5, seed=2, batch_size=50)
        for samples in (50, 100, 200)
    ]
    by_iters = [
        comass(form, samples=100, ascent_iters=iters, seed=2, batch_size=50)
        for iters in (0, 10, 40)
    ]
    assert by_samples == sorted(by_samples)
    assert by_iters == sorted(by_iters)


@pytest.mark.parametrize(
    "form, tolerance",
    [
        (kahler_power(3, 1), 1e-3),
        (kahler_power(3, 2), 1e-3),
        (kahler_power(3, 3), 1e-9),
        (g2_coassociative(), 5e-3),
        (spin7_form(), 5e-3),
    ],
)
def test_comass_of_calibrations(form, tolerance):
    """Tests if the standard calibrations have comass one."""
    value = comass(form, samples=1000, ascent_iters=200, batch_size=250)
    assert value <= 1.0 + 1e-9
    assert value == pytest.approx(1.0, abs=tolerance)


def test_kahler_strict_on_real_planes():
    """Tests if random real planes stay below one while complex planes reach it."""
    rng = np.random.default_rng(8)
    form = kahler_power(2, 1)
    values = form.evaluate_frames(random_frames(rng, 1000, 4, 2))
    assert np.all(values < 1.0)
    for _ in range(10):
        gauss = rng.standard_normal((3, 2)) + 1j * rng.standard_normal((3, 2))
        vectors, _ = np.linalg.qr(gauss)
        frame = complex_frame(vectors.T)
        assert kahler_power(3, 2).evaluate_frame(frame) == pytest.approx(1.0, abs=1e-9)
        assert kahler_power(3, 1).evaluate_frame(frame[:2]) == pytest.approx(1.0, abs=1e-9)
