"""Evolution, position moments, variance minima and transition peaks."""

import logging
import math

import numpy as np
import pytest
from scipy.integrate import trapezoid

from chronos.basis import SpatialGrid, WaveFunction
from chronos.dynamics import (
    Trajectory,
    count_density_maxima,
    density_frames,
    evolve,
    expectation_q,
    golden_section_max,
    position_moments_on_grid,
    slope_fit,
    trajectory,
    transition_curve,
    transition_peak,
    transition_probability,
    transition_scan,
    variance_minimum_time,
    variance_q,
)
from chronos.errors import InputError
from chronos.operators import cto_matrix, eig_hermitian


def _superposition(basis, weights: dict[int, complex]) -> WaveFunction:
    coefficients = np.zeros(basis.dim, dtype=complex)
    for k, weight in weights.items():
        coefficients[basis.index_of(k)] = weight
    return WaveFunction(basis, coefficients).normalized()


def _synthetic_trajectory(times: np.ndarray, var: np.ndarray) -> Trajectory:
    return Trajectory(times=times, mean_q=np.zeros_like(times), var_q=var, norm=np.ones_like(times))


def test_evolve_identity_and_unitarity(random_state):
    np.testing.assert_array_equal(evolve(random_state, 0.0).coefficients, random_state.coefficients)
    assert evolve(random_state, 0.37).norm == pytest.approx(1.0, abs=1e-12)
    assert evolve(random_state, -2.5).norm == pytest.approx(1.0, abs=1e-12)


def test_evolve_group_property(random_state):
    two_steps = evolve(evolve(random_state, 0.21), 0.13)
    np.testing.assert_allclose(two_steps.coefficients, evolve(random_state, 0.34).coefficients, atol=1e-12)
    back = evolve(evolve(random_state, 0.5), -0.5)
    np.testing.assert_allclose(back.coefficients, random_state.coefficients, atol=1e-12)


def test_expectation_of_superposition(small_basis):
    wf = _superposition(small_basis, {0: 1.0, 1: 1j})
    assert expectation_q(wf) == pytest.approx(-1 / math.pi, rel=1e-12)


def test_basis_state_moments(small_basis):
    wf = WaveFunction.basis_state(small_basis, 3)
    assert expectation_q(wf) == pytest.approx(0.0, abs=1e-15)
    assert variance_q(wf) == pytest.approx(1 / 3, rel=1e-12)


def test_matrix_and_grid_moments_agree(random_state):
    mean, var = position_moments_on_grid(random_state, SpatialGrid(2001))
    assert mean == pytest.approx(expectation_q(random_state), abs=1e-6)
    assert var == pytest.approx(variance_q(random_state), abs=1e-6)


def test_unnormalized_input_rejected(random_state):
    doubled = random_state.with_coefficients(2 * random_state.coefficients)
    with pytest.raises(InputError):
        expectation_q(doubled)
    with pytest.raises(InputError):
        trajectory(doubled, [0.0, 0.1])


def test_trajectory_norm_drift(random_state):
    traj = trajectory(random_state, np.linspace(-0.5, 0.5, 2001))
    assert traj.norm_drift <= 1e-12
    assert traj.mean_q[1000] == pytest.approx(expectation_q(random_state), abs=1e-12)
    assert traj.var_q[1000] == pytest.approx(variance_q(random_state), abs=1e-12)


def test_trajectory_rejects_bad_grid(random_state):
    with pytest.raises(InputError):
        trajectory(random_state, [])
    with pytest.raises(InputError):
        trajectory(random_state, [0.0, 0.2, 0.1])


def test_stationary_state_has_flat_trajectory(small_basis):
    traj = trajectory(WaveFunction.basis_state(small_basis, -2), np.linspace(0.0, 1e-3, 11))
    np.testing.assert_allclose(traj.var_q, 1 / 3, rtol=1e-12)
    np.testing.assert_allclose(traj.mean_q, 0.0, atol=1e-15)


def test_time_reversal_mirror(random_state):
    times = np.linspace(0.0, 0.2, 101)
    forward = trajectory(random_state, times)
    # conjugating coefficients reverses time and reflects q -> -q
    mirrored = trajectory(random_state.conjugated(), -times[::-1])
    np.testing.assert_allclose(mirrored.var_q[::-1], forward.var_q, atol=1e-10)
    np.testing.assert_allclose(mirrored.mean_q[::-1], -forward.mean_q, atol=1e-10)


def test_sampling_warning(small_basis, caplog):
    wf = WaveFunction.basis_state(small_basis, 8)
    with caplog.at_level(logging.WARNING, logger="chronos.dynamics"):
        traj = trajectory(wf, np.linspace(0.0, 1.0, 11))
    assert traj.warnings
    assert traj.step_limit == pytest.approx(0.1 / small_basis.energies.max())
    assert "sampling limit" in caplog.text


def test_variance_minimum_on_parabola():
    times = np.linspace(0.0, 0.6, 50)
    result = variance_minimum_time(_synthetic_trajectory(times, (times - 0.3) ** 2 + 0.1))
    assert result.t_min == pytest.approx(0.3, abs=1e-10)
    assert result.var_min == pytest.approx(0.1, abs=1e-10)
    assert not result.at_edge and not result.no_minimum


def test_variance_minimum_edge_and_flat():
    times = np.linspace(0.0, 1.0, 20)
    edge = variance_minimum_time(_synthetic_trajectory(times, 1.0 + times))
    assert edge.at_edge and edge.t_min == 0.0
    flat = variance_minimum_time(_synthetic_trajectory(times, np.full(20, 0.25)))
    assert flat.no_minimum
    with pytest.raises(InputError):
        variance_minimum_time(_synthetic_trajectory(times[:2], times[:2]))


def test_transition_probability_basics(random_state, small_basis):
    assert transition_probability(random_state, random_state, 0.0) == pytest.approx(1.0, abs=1e-12)
    other = WaveFunction.basis_state(small_basis, 2)
    times = np.linspace(0.0, 0.4, 9)
    forward = transition_curve(random_state, other, times)
    assert np.all((forward >= 0.0) & (forward <= 1.0))
    np.testing.assert_allclose(forward, transition_curve(other, random_state, -times), atol=1e-14)


def test_two_level_peak(small_basis):
    a = _superposition(small_basis, {0: 1.0, 1: 1.0})
    b = _superposition(small_basis, {0: 1.0, 1: -1.0})
    gap = small_basis.energies[small_basis.index_of(1)] - small_basis.energies[small_basis.index_of(0)]
    peak = transition_peak(a, b, (0.0, 1.2 * math.pi / gap))
    assert peak.t_max == pytest.approx(math.pi / gap, rel=1e-6)
    assert peak.p_max == pytest.approx(1.0, abs=1e-12)
    assert not peak.boundary_flag


def test_peak_on_edge_widens_window(small_basis):
    a = _superposition(small_basis, {0: 1.0, 1: 1.0})
    b = _superposition(small_basis, {0: 1.0, 1: -1.0})
    gap = small_basis.energies[small_basis.index_of(1)] - small_basis.energies[small_basis.index_of(0)]
    peak = transition_peak(a, b, (0.0, 0.6 * math.pi / gap))
    assert peak.window[1] == pytest.approx(1.2 * math.pi / gap)
    assert peak.t_max == pytest.approx(math.pi / gap, rel=1e-6)


def test_transition_peak_validation(random_state):
    with pytest.raises(InputError):
        transition_peak(random_state, random_state, (1.0, 0.5))
    with pytest.raises(InputError):
        transition_peak(random_state, random_state, (0.0, 1.0), samples=8)
    with pytest.raises(InputError):
        transition_peak(random_state, random_state, (0.0, 1.0), direction=0)


def test_golden_section_max():
    x, y = golden_section_max(lambda t: -((t - 0.7) ** 2), 0.0, 2.0, 1e-9)
    assert x == pytest.approx(0.7, abs=1e-8)
    assert y == pytest.approx(0.0, abs=1e-15)


def test_cto_negative_pairs_mirror_backward_scan(small_basis):
    system = eig_hermitian(cto_matrix(small_basis))
    pairs = [(1, 2), (2, 3), (3, 4)]
    backward = transition_scan(system, small_basis, pairs, direction=-1, samples=256)
    negative = transition_scan(system, small_basis, pairs, direction=1, negative=True, samples=256)
    np.testing.assert_allclose(negative.t_max, backward.t_max, rtol=1e-5)
    np.testing.assert_allclose(negative.p_max, backward.p_max, atol=1e-9)
    np.testing.assert_allclose(negative.delta_tau, -backward.delta_tau, atol=1e-12)


def test_slope_fit_exact_lines():
    fit = slope_fit([(1.0, 2.0), (2.0, 4.0), (3.0, 6.0)])
    assert fit.slope == pytest.approx(2.0)
    assert fit.intercept == pytest.approx(0.0, abs=1e-12)
    assert fit.r_squared == pytest.approx(1.0)
    flat = slope_fit([(0.0, 1.0), (1.0, 1.0), (2.0, 1.0)])
    assert flat.slope == 0.0
    assert flat.r_squared == 1.0


def test_slope_fit_noisy_line():
    rng = np.random.default_rng(3)
    x = np.linspace(0.0, 1.0, 50)
    y = 1.5 * x + 0.2 + 0.01 * rng.standard_normal(50)
    fit = slope_fit(list(zip(x, y)))
    assert abs(fit.slope - 1.5) <= 4 * fit.slope_stderr
    assert abs(fit.intercept - 0.2) <= 4 * fit.intercept_stderr
    assert fit.r_squared > 0.99


def test_slope_fit_degenerate():
    with pytest.raises(InputError):
        slope_fit([(1.0, 2.0)])
    with pytest.raises(InputError):
        slope_fit([(1.0, 2.0), (1.0, 3.0)])


def test_density_frames(random_state):
    grid = SpatialGrid(801)
    frames = density_frames(random_state, [0.0, 0.05, 0.1], grid)
    assert frames.density.shape == (3, 801)
    for row in frames.density:
        assert trapezoid(row, grid.points) == pytest.approx(1.0, abs=1e-6)


def test_count_density_maxima():
    q = np.linspace(-1.0, 1.0, 801)
    double = np.exp(-((q - 0.4) ** 2) / 0.01) + np.exp(-((q + 0.4) ** 2) / 0.01)
    assert count_density_maxima(double) == 2
    single = np.exp(-(q**2) / 0.02)
    assert count_density_maxima(single) == 1
    ripple = single + 0.01 * np.exp(-((q - 0.7) ** 2) / 0.001)
    assert count_density_maxima(ripple) == 1
    assert count_density_maxima(np.zeros(10)) == 0
