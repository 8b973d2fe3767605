import math

import numpy as np
import pytest

from levywell import Grid, ShapeError, UsageError, WaveFunction, make_params
from levywell.evolution import (
    SpectralCoefficients,
    energy_expectation,
    evolve_by_kernel,
    evolve_spectral,
    expand,
    fidelity,
    gaussian_packet,
    reconstruct,
    revival_time,
    truncated_mass,
    uniform_state,
)
from levywell.freekernel import TimeType
from levywell.well import eigenfunction_values, eigenstate, propagator_matrix


@pytest.fixture
def grid():
    return Grid.well(1.0, 1024)


def random_coefficients(rng, params, n=25):
    c = rng.normal(size=n) + 1j * rng.normal(size=n)
    return SpectralCoefficients(c / np.linalg.norm(c), params)


class TestExpand:
    def test_eigenstate_is_unit_vector(self, grid):
        params = make_params(1.5)
        c = expand(eigenfunction_values(eigenstate(3, params), grid), 10, params)
        expected = np.zeros(10)
        expected[2] = 1.0
        np.testing.assert_allclose(c.coeffs, expected, atol=1e-8)

    def test_uniform_state_coefficients(self):
        params = make_params(1.5)
        g = Grid.well(1.0, 4097)
        c = expand(uniform_state(g, params), 64, params)
        n = np.arange(1, 65)
        k = n * math.pi / 2
        analytic = ((-1.0) ** n - 1.0) / (math.sqrt(2.0) * k)
        # trapezoid error grows like (h k_n)^2
        np.testing.assert_allclose(c.coeffs.real[:8], analytic[:8], atol=1e-6)
        np.testing.assert_allclose(c.coeffs.real, analytic, rtol=1e-3, atol=1e-12)
        assert c.coeffs[0].real == pytest.approx(-2 * math.sqrt(2) / math.pi, abs=1e-6)
        assert c.coeffs[0].real == pytest.approx(-0.900316, abs=1e-6)
        assert abs(c.coeffs[1]) < 1e-12
        # |c_n|^2 = 8 / (pi n)^2 for odd n, so the missed mass is the tail of that series, ~ 4 / (pi^2 N)
        eps = truncated_mass(c)
        assert eps == pytest.approx(1.0 - np.sum(analytic**2), abs=1e-5)
        assert eps == pytest.approx(4 / (math.pi**2 * 64), rel=0.02)

    def test_bessel_bound(self, grid, rng):
        params = make_params(1.5)
        psi = gaussian_packet(grid, params, center=0.1, width=0.2, momentum=5.0)
        assert expand(psi, 200, params).captured_mass() <= 1 + 1e-6

    def test_leakage_rejected(self):
        params = make_params(1.5)
        g = Grid(-2.0, 2.0, 401)
        with pytest.raises(UsageError, match="outside"):
            expand(WaveFunction(g, np.exp(-(g.points**2))), 10, params)

    def test_mode_count_validated(self, grid):
        params = make_params(1.5)
        with pytest.raises(UsageError):
            expand(uniform_state(grid, params), 0, params)


class TestSpectralEvolution:
    def test_stationary_state(self, grid):
        params = make_params(1.5)
        c0 = expand(eigenfunction_values(eigenstate(2, params), grid), 8, params)
        dens0 = np.abs(reconstruct(c0, grid).values) ** 2
        for t in (0.3, 1.7, 12.0):
            dens = np.abs(reconstruct(evolve_spectral(c0, t), grid).values) ** 2
            np.testing.assert_allclose(dens, dens0, atol=1e-12)

    def test_norm_and_energy_conserved(self, grid, rng):
        params = make_params(1.3)
        c = random_coefficients(rng, params)
        n0, e0 = reconstruct(c, grid).norm(), energy_expectation(c)
        for _ in range(50):
            c = evolve_spectral(c, 0.13)
            assert reconstruct(c, grid).norm() == pytest.approx(n0, abs=1e-10)
            assert energy_expectation(c) == pytest.approx(e0, rel=1e-10)
        assert c.time == pytest.approx(50 * 0.13)

    def test_phases_commute(self, rng):
        params = make_params(1.7)
        c = random_coefficients(rng, params)
        a = evolve_spectral(evolve_spectral(c, 0.4), 1.1)
        b = evolve_spectral(evolve_spectral(c, 1.1), 0.4)
        # complex products are commutative but not associative, so agreement is to rounding
        np.testing.assert_allclose(a.coeffs, b.coeffs, rtol=0, atol=1e-15)
        assert a.time == b.time

    def test_classical_revival(self, grid):
        params = make_params(2.0, d_alpha=0.5, l=1.0)
        psi = gaussian_packet(grid, params, center=-0.3, width=0.1, momentum=12.0)
        c = expand(psi, 200, params)
        start = reconstruct(c, grid)
        later = reconstruct(evolve_spectral(c, revival_time(params)), grid)
        assert fidelity(start, later) == pytest.approx(1.0, abs=1e-8)
        half = reconstruct(evolve_spectral(c, 0.37 * revival_time(params)), grid)
        assert fidelity(start, half) < 0.9

    def test_revival_needs_classical_limit(self):
        with pytest.raises(Exception):
            revival_time(make_params(1.5))

    def test_fidelity_of_zero_state(self, grid):
        z = WaveFunction(grid, np.zeros(grid.n_points))
        with pytest.raises(UsageError):
            fidelity(z, z)


class TestKernelEvolution:
    def test_agrees_with_spectral(self, grid):
        params = make_params(1.5)
        psi = gaussian_packet(grid, params, center=0.2, width=0.12, momentum=-6.0)
        by_modes = reconstruct(evolve_spectral(expand(psi, 200, params), 0.1), grid)
        matrix = propagator_matrix(grid, 0.1, params, time_type=TimeType.REAL, modes=200)
        by_kernel = evolve_by_kernel(psi, 0.1, matrix)
        assert np.max(np.abs(by_kernel.values - by_modes.values)) < 1e-5

    def test_semigroup(self, grid):
        params = make_params(1.5)
        psi = gaussian_packet(grid, params, width=0.15)
        one = propagator_matrix(grid, 0.05, params, time_type=TimeType.REAL)
        two = propagator_matrix(grid, 0.1, params, time_type=TimeType.REAL)
        twice = evolve_by_kernel(evolve_by_kernel(psi, 0.05, one), 0.05, one)
        once = evolve_by_kernel(psi, 0.1, two)
        assert np.max(np.abs(twice.values - once.values)) < 1e-5

    def test_norm_per_step(self, grid):
        params = make_params(1.5)
        psi = gaussian_packet(grid, params, width=0.15, momentum=3.0)
        matrix = propagator_matrix(grid, 0.05, params, time_type=TimeType.REAL)
        for _ in range(10):
            nxt = evolve_by_kernel(psi, 0.05, matrix)
            assert abs(nxt.norm() - psi.norm()) < 1e-4
            psi = nxt

    def test_zero_state(self, grid):
        params = make_params(1.5)
        matrix = propagator_matrix(grid, 0.1, params, time_type=TimeType.REAL, modes=50)
        out = evolve_by_kernel(WaveFunction(grid, np.zeros(grid.n_points)), 0.1, matrix)
        assert np.all(out.values == 0)

    def test_mismatch(self, grid):
        params = make_params(1.5)
        matrix = propagator_matrix(grid, 0.1, params, modes=20)
        with pytest.raises(UsageError):
            evolve_by_kernel(uniform_state(grid, params), 0.2, matrix)
        other = Grid.well(1.0, 512)
        with pytest.raises(ShapeError):
            evolve_by_kernel(uniform_state(other, params), 0.1, matrix)
