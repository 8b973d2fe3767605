import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from levywell import Grid, NumericalFailure, UsageError, WaveFunction, inner_product, make_params
from levywell.riesz import (
    RieszMethod,
    hamiltonian_matrix,
    momentum_lattice,
    periodic_image_correction,
    riesz_constant,
    riesz_full_line,
    riesz_singular,
    riesz_spectral,
)


def bump(x):
    x = np.asarray(x, dtype=float)
    inside = np.abs(x) < 1.0
    return np.where(inside, np.exp(-1.0 / np.where(inside, 1.0 - x * x, 1.0)), 0.0)


def smooth_state(seed, grid):
    r = np.random.default_rng(seed)
    x = grid.points
    vals = sum((r.normal() + 1j * r.normal()) * np.exp(-((x - r.uniform(-1, 1)) ** 2) / 0.1) for _ in range(3))
    return WaveFunction(grid, vals)


class TestSpectral:
    def test_plane_wave_eigenvalue(self):
        grid = Grid.ring(2.0 * math.pi, 64)
        psi = WaveFunction(grid, np.exp(2j * grid.points))
        out = riesz_spectral(psi, make_params(1.5)).values
        np.testing.assert_allclose(out, -(2.0**1.5) * psi.values, rtol=1e-10)
        assert -(2.0**1.5) == pytest.approx(-2.828427, abs=1e-6)

    def test_constant_maps_to_zero(self):
        grid = Grid.ring(3.0, 128)
        out = riesz_spectral(WaveFunction(grid, np.full(128, 2.5)), make_params(1.3)).values
        assert np.max(np.abs(out)) < 1e-12

    def test_lattice_convention(self):
        grid = Grid.ring(4.0, 8)
        p = momentum_lattice(grid, 2.0)
        np.testing.assert_allclose(p, 2.0 * 2.0 * math.pi * np.fft.fftfreq(8, 0.5))
        assert p[4] == pytest.approx(-2.0 * math.pi * 2.0)

    def test_alpha_two_is_second_derivative(self):
        grid = Grid.ring(20.0, 4096)
        x = grid.points
        psi = np.exp(-(x**2))
        out = riesz_spectral(WaveFunction(grid, psi), make_params(2.0)).values.real
        h = grid.spacing
        fd = (np.roll(psi, -1) - 2 * psi + np.roll(psi, 1)) / h**2
        assert np.max(np.abs(out - fd)) / np.max(np.abs(fd)) < 1e-4

    def test_alpha_two_fd_converges_at_second_order(self):
        errs = []
        for n in (512, 1024, 2048):
            grid = Grid.ring(20.0, n)
            psi = np.exp(-(grid.points**2))
            exact = riesz_spectral(WaveFunction(grid, psi), make_params(2.0)).values.real
            fd = (np.roll(psi, -1) - 2 * psi + np.roll(psi, 1)) / grid.spacing**2
            errs.append(np.max(np.abs(exact - fd)))
        for a, b in zip(errs, errs[1:]):
            assert 1.5 <= math.log2(a / b) <= 2.5

    def test_hbar_scaling(self):
        grid = Grid.ring(10.0, 256)
        psi = WaveFunction(grid, np.exp(-(grid.points**2)))
        a = riesz_spectral(psi, make_params(1.4, hbar=1.0)).values
        b = riesz_spectral(psi, make_params(1.4, hbar=1.7)).values
        np.testing.assert_allclose(b, 1.7**1.4 * a, rtol=1e-12, atol=1e-14)

    @pytest.mark.parametrize("grid", [Grid(-1.0, 1.0, 64, periodic=False), Grid.ring(2.0, 96)])
    def test_bad_grids(self, grid):
        with pytest.raises(UsageError):
            riesz_spectral(WaveFunction(grid, np.zeros(grid.n_points)), make_params(1.5))

    @settings(max_examples=20, deadline=None)
    @given(st.integers(0, 2**31), st.sampled_from([1.2, 1.5, 1.8, 2.0]))
    def test_symmetric_and_negative(self, seed, alpha):
        grid = Grid.ring(6.0, 128)
        params = make_params(alpha)
        phi, psi = smooth_state(seed, grid), smooth_state(seed + 1, grid)
        r_phi, r_psi = riesz_spectral(phi, params), riesz_spectral(psi, params)
        lhs, rhs = inner_product(phi, r_psi), inner_product(r_phi, psi)
        assert abs(lhs - rhs) < 1e-10 * max(1.0, abs(lhs))
        assert inner_product(psi, r_psi).real <= 1e-10


class TestHamiltonian:
    def test_classical_free_spectrum(self):
        grid = Grid.ring(2.0 * math.pi, 64)
        h = hamiltonian_matrix(grid, 0.0, make_params(2.0, d_alpha=0.5))
        eig = np.sort(np.linalg.eigvalsh(h))
        p = np.sort(np.abs(momentum_lattice(grid, 1.0)))
        expected = np.sort(p**2 / 2)
        np.testing.assert_allclose(eig[1:], expected[1:], rtol=1e-8)
        assert abs(eig[0]) < 1e-8

    def test_hermitian(self):
        h = hamiltonian_matrix(Grid.ring(2.0, 512), 0.0, make_params(1.5))
        assert np.max(np.abs(h - h.conj().T)) < 1e-10

    def test_constant_potential_shift(self):
        grid = Grid.ring(4.0, 64)
        params = make_params(1.7)
        e0 = np.linalg.eigvalsh(hamiltonian_matrix(grid, 0.0, params))
        e1 = np.linalg.eigvalsh(hamiltonian_matrix(grid, 0.75, params))
        np.testing.assert_allclose(e1 - e0, 0.75, atol=1e-9)

    def test_matches_operator(self, rng):
        grid = Grid.ring(5.0, 64)
        params = make_params(1.3, d_alpha=0.8)
        v = rng.normal(size=64)
        psi = WaveFunction(grid, rng.normal(size=64) + 1j * rng.normal(size=64))
        direct = -params.d_alpha * riesz_spectral(psi, params).values + v * psi.values
        np.testing.assert_allclose(hamiltonian_matrix(grid, v, params) @ psi.values, direct, atol=1e-10)


class TestSingular:
    def test_constant(self):
        assert riesz_constant(2.0) == 0.0
        assert riesz_constant(1.0) == pytest.approx(1.0 / math.pi)

    def test_zero_function(self):
        assert riesz_singular(lambda y: 0.0, 0.3, make_params(1.5), support=(-1, 1)) == 0

    @pytest.mark.parametrize("alpha", [1.2, 1.5, 1.8])
    def test_bump_centre_against_padded_spectral(self, alpha):
        params = make_params(alpha)
        grid = Grid.ring(16.0, 4096)
        wf = WaveFunction(grid, bump(grid.points))
        centre = int(np.argmin(np.abs(grid.points)))
        spectral = riesz_full_line(wf, params, (-1.0, 1.0)).values[centre].real
        singular = riesz_singular(bump, grid.points[centre], params, support=(-1.0, 1.0)).real
        assert abs(spectral - singular) < 1e-4 * abs(singular)

    def test_padding_alone_converges_to_full_line(self):
        # wrap-around decays like padding^-alpha; the lattice-sum correction removes it
        params = make_params(1.5)
        singular = riesz_singular(bump, 0.0, params, support=(-1.0, 1.0)).real
        errors = []
        for length in (16.0, 64.0):
            grid = Grid.ring(length, int(256 * length))
            wf = WaveFunction(grid, bump(grid.points))
            centre = int(np.argmin(np.abs(grid.points)))
            errors.append(abs(riesz_spectral(wf, params).values[centre].real - singular))
            corr = periodic_image_correction(wf, params, (-1.0, 1.0))
            assert corr[np.abs(grid.points) > 1.0].max() == 0
        assert errors[1] < errors[0] / 5

    def test_gaussian_second_derivative_dispatch(self):
        params = make_params(2.0)
        g = lambda y: math.exp(-y * y)
        g2 = lambda y: (4 * y * y - 2) * math.exp(-y * y)
        assert riesz_singular(g, 0.0, params, second_derivative=g2) == pytest.approx(-2.0, abs=1e-14)
        fd = riesz_singular(g, 0.0, params, RieszMethod.singular(fd_step=1e-3))
        assert fd.real == pytest.approx(-2.0, abs=1e-8)

    def test_hbar_in_local_limit(self):
        g = lambda y: math.exp(-y * y)
        out = riesz_singular(g, 0.0, make_params(2.0, hbar=2.0), RieszMethod.singular(fd_step=1e-3))
        assert out.real == pytest.approx(-8.0, abs=1e-7)

    def test_complex_and_outside_support(self):
        params = make_params(1.5)
        f = lambda y: (1.0 + 2.0j) * bump(y)
        inside = riesz_singular(f, 0.2, params, support=(-1, 1))
        real = riesz_singular(bump, 0.2, params, support=(-1, 1))
        assert inside == pytest.approx((1.0 + 2.0j) * real, rel=1e-9)
        outside = riesz_singular(bump, 2.5, params, support=(-1, 1))
        # outside the support the operator sees only the attraction of the mass: positive
        assert outside.real > 0

    def test_explicit_cutoff_matches_default(self):
        params = make_params(1.5)
        a = riesz_singular(bump, 0.3, params, support=(-1, 1))
        b = riesz_singular(bump, 0.3, params, RieszMethod.singular(cutoff_radius=5.0), support=(-1, 1))
        assert a == pytest.approx(b, rel=1e-9)

    def test_usage_errors(self):
        params = make_params(1.5)
        with pytest.raises(UsageError):
            riesz_singular(bump, 1.0, params, support=(-1, 1))
        with pytest.raises(UsageError):
            riesz_singular(bump, 0.0, params)
        with pytest.raises(UsageError):
            riesz_singular(bump, 0.0, params, RieszMethod.singular(cutoff_radius=0.5), support=(-1, 1))

    def test_quadrature_failure_carries_estimate(self):
        wild = lambda y: float(np.sign(np.sin(5000.0 * y))) if abs(y) < 1 else 0.0
        with pytest.raises(NumericalFailure) as info:
            riesz_singular(wild, 0.1, make_params(1.5), RieszMethod.singular(inner_tolerance=1e-12), support=(-1, 1))
        assert info.value.estimate > 0


class TestMethodValidation:
    @pytest.mark.parametrize(
        "kwargs",
        [
            {"variant": "fourier"},
            {"variant": "singular", "cutoff_radius": -1.0},
            {"variant": "singular", "inner_tolerance": 0.0},
            {"variant": "singular", "inner_tolerance": 0.1},
            {"variant": "singular", "fd_order": 3},
        ],
    )
    def test_rejects(self, kwargs):
        with pytest.raises(UsageError):
            RieszMethod(**kwargs)

    def test_as_dict(self):
        assert RieszMethod.spectral().as_dict()["variant"] == "spectral"
