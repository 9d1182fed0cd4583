import math

import numpy as np
import pytest

from lhvlab.chsh import (
    CLASSICAL_BOUND,
    TSIRELSON_BOUND,
    BlochDirection,
    BlochDirectionError,
    ChshSettings,
    chsh_from_lhv,
    chsh_value,
    correlation,
    correlation_tensor,
    maximally_mixed_state,
    maximize_chsh,
    mixed_decomposition,
    singlet_state,
    spin_observable,
    state_from_spec,
    werner_state,
)
from lhvlab.lhv_model import (
    SeparableDecomposition,
    build_u_state,
    lhv_from_separable,
    u_decomposition,
)
from lhvlab.operators import DensityOperator, DimensionError, projector
from lhvlab.sampling import make_rng, random_separable_decomposition, random_settings

TEXTBOOK_SETTINGS = ChshSettings.from_angles([0, math.pi / 2, math.pi / 4, -math.pi / 4])


def test_bloch_direction_must_be_unit_vector():
    BlochDirection(0, 0, 1)
    with pytest.raises(BlochDirectionError):
        BlochDirection(0, 0, 1.1)
    with pytest.raises(ValueError):
        BlochDirection(0, 0, 0)


def test_bloch_direction_from_angles():
    direction = BlochDirection.from_angles(math.pi / 2, math.pi / 2)
    assert direction.vector == pytest.approx([0, 1, 0])


def test_spin_observable_has_spectrum_plus_minus_one():
    observable = spin_observable(BlochDirection.from_angles(0.3, 1.2))
    assert np.linalg.eigvalsh(observable.matrix) == pytest.approx([-1, 1])


def test_singlet_correlation():
    """
    Test the perfect anticorrelation of the singlet, E(a, b) = -a . b.
    """
    rho = singlet_state()
    z = BlochDirection(0, 0, 1)
    x = BlochDirection(1, 0, 0)
    assert correlation(rho, z, z) == pytest.approx(-1)
    assert correlation(rho, x, x) == pytest.approx(-1)
    assert correlation(rho, x, z) == pytest.approx(0, abs=1e-15)
    assert np.allclose(correlation_tensor(rho), -np.eye(3))


def test_singlet_reaches_tsirelson_bound_with_textbook_settings():
    """
    Test that the singlet reaches -2 sqrt(2) at a = z, a' = x, b and b' at +-45 degrees.
    """
    assert chsh_value(singlet_state(), TEXTBOOK_SETTINGS) == pytest.approx(-TSIRELSON_BOUND)


def test_maximize_chsh_for_singlet():
    """
    Test that the grid search with 24 steps finds |CHSH| >= 2.82 for the singlet.
    """
    optimum = maximize_chsh(singlet_state(), grid_steps=24)
    assert optimum.value >= 2.82
    assert optimum.value == pytest.approx(TSIRELSON_BOUND, abs=1e-9)
    assert optimum.profile.shape == (24, 24)
    assert optimum.profile_arguments.shape == (24, 24, 2)
    assert abs(chsh_value(singlet_state(), optimum.settings)) == pytest.approx(optimum.value)


def test_maximize_chsh_on_full_sphere():
    optimum = maximize_chsh(singlet_state(), grid_steps=24, planar=False)
    assert optimum.value >= 2.82
    assert optimum.value <= TSIRELSON_BOUND + 1e-9


def test_separable_states_obey_classical_bound():
    """
    Test that the largest |CHSH| of U(alpha, 1 - alpha) is at most 2 for alpha in 0, 0.25, .. 1.
    """
    for alpha in (0, 0.25, 0.5, 0.75, 1):
        optimum = maximize_chsh(build_u_state(alpha, 1 - alpha), grid_steps=24)
        assert optimum.value <= CLASSICAL_BOUND + 1e-9


def test_maximally_mixed_state_has_no_correlations():
    optimum = maximize_chsh(maximally_mixed_state(), grid_steps=8, refine_iters=5)
    assert optimum.value == pytest.approx(0, abs=1e-12)


@pytest.mark.parametrize("p", [0.2, 0.5, 0.8, 1.0])
def test_werner_state(p):
    """
    Test that the Werner state reaches 2 sqrt(2) p, exceeding 2 only above p = 1/sqrt(2).
    """
    optimum = maximize_chsh(werner_state(p), grid_steps=24)
    assert optimum.value == pytest.approx(TSIRELSON_BOUND * p, abs=1e-9)
    assert (optimum.value > CLASSICAL_BOUND) == (p > 1 / math.sqrt(2))


def test_werner_parameter_is_checked():
    with pytest.raises(ValueError):
        werner_state(1.5)


def test_lhv_chsh_equals_quantum_chsh():
    """
    Test that the CHSH value of 20 random models equals the value of their target
    states for 20 random settings each.
    """
    rng = make_rng(8)
    for _ in range(20):
        model = lhv_from_separable(random_separable_decomposition(rng))
        for _ in range(20):
            settings = random_settings(rng)
            assert abs(
                chsh_from_lhv(model, settings) - chsh_value(model.target_state, settings)
            ) <= 1e-9


def test_lhv_chsh_of_u_model():
    model = lhv_from_separable(u_decomposition(0.4, 0.6))
    value = chsh_from_lhv(model, TEXTBOOK_SETTINGS)
    assert abs(value) <= CLASSICAL_BOUND
    assert value == pytest.approx(chsh_value(model.target_state, TEXTBOOK_SETTINGS))


def test_chsh_needs_two_qubits():
    qutrit_pair = DensityOperator(np.eye(9) / 9)
    with pytest.raises(DimensionError):
        chsh_value(qutrit_pair, TEXTBOOK_SETTINGS)
    decomposition = [(1.0, projector([1, 0, 0]), projector([1, 0]))]
    model = lhv_from_separable(SeparableDecomposition(decomposition))
    with pytest.raises(DimensionError):
        chsh_from_lhv(model, TEXTBOOK_SETTINGS)


def test_maximize_chsh_needs_enough_grid_steps():
    with pytest.raises(ValueError):
        maximize_chsh(singlet_state(), grid_steps=2)


def test_state_from_spec():
    """
    Test that separable specifications come with a decomposition and entangled ones do not.
    """
    state, decomposition = state_from_spec("singlet")
    assert decomposition is None
    state, decomposition = state_from_spec("mixed")
    assert np.allclose(state.matrix, np.eye(4) / 4)
    assert len(decomposition) == len(mixed_decomposition()) == 4
    state, decomposition = state_from_spec("u:0.25")
    assert np.allclose(state.matrix, build_u_state(0.25, 0.75).matrix)
    state, decomposition = state_from_spec("werner:0.5")
    assert decomposition is None
    with pytest.raises(ValueError):
        state_from_spec("ghz")


def test_settings_as_dict():
    information = TEXTBOOK_SETTINGS.as_dict()
    assert sorted(information) == ["a", "a_prime", "b", "b_prime"]
    assert information["a"] == pytest.approx([0, 0, 1])


def test_maximize_chsh_on_full_sphere_finds_correlations_along_y():
    """
    Test that the full-sphere search reaches 2 sqrt(2) for (|00> + i|11>) / sqrt(2), whose
    optimal settings leave the x-z plane.
    """
    state = projector([1, 0, 0, 1j])
    assert np.allclose(correlation_tensor(state), [[0, 1, 0], [1, 0, 0], [0, 0, 1]])
    planar_optimum = maximize_chsh(state, grid_steps=24, refine_iters=50)
    assert planar_optimum.value == pytest.approx(CLASSICAL_BOUND, abs=1e-9)
    optimum = maximize_chsh(state, grid_steps=24, refine_iters=50, planar=False)
    assert optimum.value >= 2.82
    assert optimum.value == pytest.approx(TSIRELSON_BOUND, abs=1e-9)
    assert abs(chsh_value(state, optimum.settings)) == pytest.approx(optimum.value)
    assert any(abs(phi) > 1e-6 for phi in optimum.phis)


def test_random_separable_states_obey_classical_bound():
    """
    Test that the largest |CHSH| of the targets of random separable decompositions is at most 2,
    in the plane and on the full sphere.
    """
    rng = make_rng(21)
    for _ in range(8):
        state = random_separable_decomposition(rng).state()
        for planar in (True, False):
            optimum = maximize_chsh(state, grid_steps=12, refine_iters=30, planar=planar)
            assert optimum.value <= CLASSICAL_BOUND + 1e-9


def test_equal_settings_give_twice_the_correlation():
    """
    Test that with a = a' = b = b' the combination collapses to 2 E(a, a).
    """
    rng = make_rng(5)
    direction = BlochDirection.from_angles(0.7, 2.1)
    settings = ChshSettings(direction, direction, direction, direction)
    for state in (singlet_state(), random_separable_decomposition(rng).state()):
        assert chsh_value(state, settings) == pytest.approx(
            2 * correlation(state, direction, direction), abs=1e-12
        )
