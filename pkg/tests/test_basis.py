"""Energy basis, position matrix elements, projection and synthesis."""

import math

import numpy as np
import pytest
from scipy.integrate import trapezoid

from chronos.basis import (
    EnergyBasis,
    SpatialGrid,
    WaveFunction,
    basis_function_value,
    composite_gauss_legendre,
    energy_eigenvalue,
    momentum_eigenvalue,
    position_matrix_element,
    position_sq_matrix_element,
    project_function,
    synthesize,
)
from chronos.config import SystemConfig
from chronos.errors import DomainError, InputError


def test_energy_eigenvalues(system):
    assert energy_eigenvalue(0, system) == pytest.approx(5.0e-5, rel=1e-12)
    assert energy_eigenvalue(1, system) == pytest.approx(4.96626, rel=1e-5)
    assert energy_eigenvalue(-1, system) == pytest.approx(4.90343, rel=1e-5)
    assert momentum_eigenvalue(1, system) == pytest.approx(0.01 + math.pi)


def test_basis_function_boundary_condition(system):
    for k in (-3, 0, 2, 7):
        left = basis_function_value(k, -1.0, system)
        right = basis_function_value(k, 1.0, system)
        assert left == pytest.approx(np.exp(-2j * system.gamma) * right, abs=1e-14)
        assert abs(basis_function_value(k, 0.3, system)) == pytest.approx(1 / math.sqrt(2.0))


def test_basis_function_outside_interval(system):
    with pytest.raises(DomainError):
        basis_function_value(0, 1.5, system)


def test_position_matrix_elements(system):
    assert position_matrix_element(0, 1, system) == pytest.approx(1j / math.pi)
    assert position_matrix_element(3, 3, system) == 0
    assert position_sq_matrix_element(0, 2, system) == pytest.approx(0.050661, abs=1e-6)
    assert position_sq_matrix_element(4, 4, system) == pytest.approx(1 / 3)


def test_position_matrices_hermitian(small_basis):
    q = small_basis.position_matrix
    q2 = small_basis.position_sq_matrix
    assert np.array_equal(q, q.conj().T)
    assert np.allclose(q2, q2.conj().T, atol=0)


def test_position_matrix_matches_quadrature(system):
    basis = EnergyBasis(system, 4)
    quad = basis.default_quadrature(oscillation_factor=2.0)
    phi = basis.functions(quad.nodes)
    weighted = phi.conj().T * quad.weights[None, :]
    np.testing.assert_allclose(weighted @ (quad.nodes[:, None] * phi), basis.position_matrix, atol=1e-12)
    np.testing.assert_allclose(weighted @ (quad.nodes[:, None] ** 2 * phi), basis.position_sq_matrix, atol=1e-12)


def test_orthonormality_by_quadrature(system):
    basis = EnergyBasis(system, 20)
    quad = basis.default_quadrature(oscillation_factor=2.0)
    phi = basis.functions(quad.nodes)
    gram = phi.conj().T @ (quad.weights[:, None] * phi)
    np.testing.assert_allclose(gram, np.eye(basis.dim), atol=1e-10)


def test_energies_distinct(system):
    basis = EnergyBasis(system, 32)
    assert np.diff(np.sort(basis.energies)).min() > 0


@pytest.mark.parametrize("K", [0, -2, 1.5, True])
def test_invalid_truncation(system, K):
    with pytest.raises(InputError):
        EnergyBasis(system, K)


def test_degenerate_gamma_rejected():
    with pytest.raises(DomainError):
        SystemConfig(gamma=0.0)
    with pytest.raises(DomainError):
        SystemConfig(gamma=math.pi / 2)


def test_project_basis_function(small_basis, system):
    wf = project_function(lambda q: basis_function_value(3, q, system), small_basis)
    expected = np.zeros(small_basis.dim)
    expected[small_basis.index_of(3)] = 1.0
    np.testing.assert_allclose(wf.coefficients, expected, atol=1e-12)


def test_project_zero_function(small_basis):
    wf = project_function(lambda q: np.zeros_like(q), small_basis)
    assert np.all(wf.coefficients == 0)
    with pytest.raises(InputError):
        wf.normalized()


def test_project_polynomial_self_convergence(small_basis):
    def f(q):
        return q * (1.0 - q**2) ** 2

    coarse = project_function(f, small_basis)
    finer = project_function(f, small_basis, composite_gauss_legendre(-1.0, 1.0, 8))
    np.testing.assert_allclose(coarse.coefficients, finer.coefficients, atol=1e-10)
    assert coarse.quadrature_error < 1e-10


def test_project_rejects_non_finite(small_basis):
    with pytest.raises(InputError):
        project_function(lambda q: np.full_like(q, np.nan), small_basis)


def test_synthesize_basis_state_modulus(small_basis):
    grid = SpatialGrid(101)
    values = synthesize(WaveFunction.basis_state(small_basis, -2), grid)
    np.testing.assert_allclose(np.abs(values), 1 / math.sqrt(2.0), atol=1e-14)


def test_project_then_synthesize(small_basis, system):
    grid = SpatialGrid(201)
    wf = project_function(lambda q: basis_function_value(2, q, system), small_basis)
    np.testing.assert_allclose(synthesize(wf, grid), basis_function_value(2, grid.points, system), atol=1e-10)


def test_parseval(random_state):
    grid = SpatialGrid(2001)
    density = np.abs(synthesize(random_state, grid)) ** 2
    assert trapezoid(density, x=grid.points) == pytest.approx(random_state.norm_sq, abs=1e-6)


def test_grid_endpoints():
    grid = SpatialGrid(1001, 2.0)
    assert grid.points[0] == -2.0
    assert grid.points[-1] == 2.0
    with pytest.raises(InputError):
        SpatialGrid(1)


def test_wavefunction_shape_and_immutability(small_basis):
    with pytest.raises(InputError):
        WaveFunction(small_basis, np.ones(3))
    wf = WaveFunction.basis_state(small_basis, 0)
    with pytest.raises(ValueError):
        wf.coefficients[0] = 2.0
    assert wf.is_normalized


def test_inner_requires_same_basis(system, small_basis):
    other = EnergyBasis(system, 4)
    with pytest.raises(InputError):
        WaveFunction.basis_state(small_basis, 0).inner(WaveFunction.basis_state(other, 0))
