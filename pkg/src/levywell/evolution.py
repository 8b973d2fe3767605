"""Time evolution in the well: eigenbasis phase rotation and kernel application."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .core import FractionalParams, Grid, ShapeError, UsageError, WaveFunction, inner_product
from .well import PropagatorMatrix, _mode_table, energy

LEAKAGE_TOLERANCE = 1e-10


@dataclass(frozen=True, eq=False)
class SpectralCoefficients:
    """Expansion coefficients c_n (n = 1..N) of a state at ``time``."""

    coeffs: np.ndarray = field(repr=False)
    params: FractionalParams
    time: float = 0.0

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=complex)
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @property
    def n_modes(self) -> int:
        return self.coeffs.size

    @property
    def energies(self) -> np.ndarray:
        return energy(np.arange(1, self.n_modes + 1), self.params)

    def captured_mass(self) -> float:
        return float(np.sum(np.abs(self.coeffs) ** 2))


def expand(psi: WaveFunction, N: int, params: FractionalParams) -> SpectralCoefficients:
    """c_n = <phi_n, psi> for n <= N, by grid quadrature."""
    if int(N) != N or N < 1:
        raise UsageError(f"mode count must be an integer >= 1, got {N}")
    x = psi.grid.points
    outside = np.abs(x) > params.l
    leaked = float(np.sum(psi.grid.weights[outside] * np.abs(psi.values[outside]) ** 2))
    if leaked > LEAKAGE_TOLERANCE:
        raise UsageError(f"state has mass {leaked:.3g} outside the well; expand needs support in [-l, l]")
    phi = _mode_table(x, int(N), params)
    return SpectralCoefficients((phi * psi.grid.weights) @ psi.values, params)


def evolve_spectral(c: SpectralCoefficients, dt: float) -> SpectralCoefficients:
    phases = np.exp(-1j * c.energies * dt / c.params.hbar)
    return replace(c, coeffs=c.coeffs * phases, time=c.time + dt)


def reconstruct(c: SpectralCoefficients, grid: Grid) -> WaveFunction:
    phi = _mode_table(grid.points, c.n_modes, c.params)
    return WaveFunction(grid, c.coeffs @ phi)


def energy_expectation(c: SpectralCoefficients) -> float:
    """sum_n E_n |c_n|^2."""
    return float(np.sum(c.energies * np.abs(c.coeffs) ** 2))


def truncated_mass(c: SpectralCoefficients, norm2: float = 1.0) -> float:
    """Mass missed by the truncation, 1 - sum |c_n|^2 for a unit-norm state."""
    return norm2 - c.captured_mass()


def fidelity(a: WaveFunction, b: WaveFunction) -> float:
    """|<a, b>| / (|a| |b|); the plain overlap modulus for unit states."""
    scale = a.norm() * b.norm()
    if scale == 0:
        raise UsageError("fidelity of a zero state is undefined")
    return abs(inner_product(a, b)) / scale


def evolve_by_kernel(psi: WaveFunction, dt: float, propagator: PropagatorMatrix) -> WaveFunction:
    """psi_f(x_i) = sum_j w_j K(x_i | x_j) psi(x_j) with the grid's quadrature weights."""
    if propagator.grid != psi.grid:
        raise ShapeError("propagator and state live on different grids")
    if not math.isclose(dt, propagator.dt, rel_tol=1e-12, abs_tol=0.0):
        raise UsageError(f"propagator was built for dt = {propagator.dt}, not {dt}")
    return WaveFunction(psi.grid, propagator.apply(psi.values))


def revival_time(params: FractionalParams) -> float:
    """T = 16 m l^2 / (pi hbar): every phase E_n T / hbar = 2 pi n^2 (alpha = 2 only)."""
    m = params.mass()
    return 16.0 * m * params.l**2 / (math.pi * params.hbar)


def uniform_state(grid: Grid, params: FractionalParams) -> WaveFunction:
    """(2l)^(-1/2) inside the well, zero outside."""
    x = grid.points
    return WaveFunction(grid, np.where(np.abs(x) <= params.l, 1.0 / math.sqrt(2.0 * params.l), 0.0))


def gaussian_packet(grid: Grid, params: FractionalParams, center=0.0, width=0.15, momentum=0.0) -> WaveFunction:
    """Normalised Gaussian packet multiplied by (l^2 - x^2) so it vanishes at the walls."""
    x = grid.points
    l = params.l
    env = np.where(np.abs(x) < l, (l * l - x * x) / (l * l), 0.0)
    psi = env * np.exp(-((x - center) ** 2) / (2 * width**2) + 1j * momentum * x / params.hbar)
    wf = WaveFunction(grid, psi)
    return wf.scaled(1.0 / wf.norm())

