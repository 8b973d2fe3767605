"""Parameters, grids, sampled states and quadrature shared by every module."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


class DomainError(ValueError):
    """A physical parameter lies outside its admissible range."""


class UsageError(ValueError):
    """An operation was called with arguments it does not support."""


class ShapeError(ValueError):
    """Sampled objects live on incompatible grids."""


class NumericalFailure(RuntimeError):
    """An iterative numerical procedure did not reach its tolerance.

    ``estimate`` carries the last achieved error estimate (``nan`` if none).
    """

    def __init__(self, message: str, estimate: float = float("nan"), **diagnostics):
        super().__init__(message)
        self.estimate = estimate
        self.diagnostics = diagnostics


@dataclass(frozen=True)
class FractionalParams:
    """Physical constants of a fractional quantum system.

    ``alpha`` is the Levy index, ``d_alpha`` the fractional diffusion
    coefficient, ``hbar`` the action unit and ``l`` the half-width of the
    infinite well centred at the origin.

    ``validation_mode`` admits ``alpha == 1`` (Cauchy flights), which is only
    meaningful for imaginary-time oracle checks.
    """

    alpha: float
    d_alpha: float = 1.0
    hbar: float = 1.0
    l: float = 1.0
    validation_mode: bool = False

    def __post_init__(self):
        for name in ("alpha", "d_alpha", "hbar", "l"):
            value = getattr(self, name)
            if not isinstance(value, (int, float, np.floating, np.integer)) or not math.isfinite(value):
                raise DomainError(f"{name} must be a finite real number, got {value!r}")
            object.__setattr__(self, name, float(value))
        if self.validation_mode and self.alpha == 1.0:
            pass
        elif not 1.0 < self.alpha <= 2.0:
            raise DomainError(
                f"alpha must lie in the interval (1, 2], got {self.alpha}"
                + ("" if self.validation_mode else " (alpha = 1 requires validation_mode)")
            )
        if self.d_alpha <= 0:
            raise DomainError(f"d_alpha must be positive, got {self.d_alpha}")
        if self.hbar <= 0:
            raise DomainError(f"hbar must be positive, got {self.hbar}")
        if self.l <= 0:
            raise DomainError(f"well half-width l must be positive, got {self.l}")

    def mass(self) -> float:
        """Particle mass from D_2 = 1/(2m); defined only for alpha = 2."""
        if self.alpha != 2.0:
            raise DomainError(f"mass() is defined only for alpha = 2, got alpha = {self.alpha}")
        return 1.0 / (2.0 * self.d_alpha)

    def as_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "d_alpha": self.d_alpha,
            "hbar": self.hbar,
            "l": self.l,
            "validation_mode": self.validation_mode,
        }


def make_params(alpha, d_alpha=1.0, hbar=1.0, l=1.0, *, validation_mode=False) -> FractionalParams:
    return FractionalParams(alpha, d_alpha, hbar, l, validation_mode)


@dataclass(frozen=True)
class Grid:
    """Uniform 1-D lattice.

    Bounded grids hold ``n_points`` nodes including both endpoints. Periodic
    grids hold ``n_points`` nodes starting at ``x_min``; ``x_max`` is the
    image of ``x_min`` and is not stored.
    """

    x_min: float
    x_max: float
    n_points: int
    periodic: bool = False

    def __post_init__(self):
        if not self.x_min < self.x_max:
            raise UsageError(f"grid needs x_min < x_max, got [{self.x_min}, {self.x_max}]")
        if int(self.n_points) != self.n_points or self.n_points < 8:
            raise UsageError(f"grid needs an integer n_points >= 8, got {self.n_points}")
        object.__setattr__(self, "n_points", int(self.n_points))
        object.__setattr__(self, "x_min", float(self.x_min))
        object.__setattr__(self, "x_max", float(self.x_max))

    @classmethod
    def well(cls, l: float, n_points: int) -> "Grid":
        """Bounded grid spanning exactly [-l, l]."""
        return cls(-l, l, n_points, periodic=False)

    @classmethod
    def ring(cls, length: float, n_points: int) -> "Grid":
        """Periodic grid of the given length centred on the origin."""
        return cls(-0.5 * length, 0.5 * length, n_points, periodic=True)

    @property
    def length(self) -> float:
        return self.x_max - self.x_min

    @property
    def spacing(self) -> float:
        if self.periodic:
            return self.length / self.n_points
        return self.length / (self.n_points - 1)

    @property
    def points(self) -> np.ndarray:
        j = np.arange(self.n_points)
        if self.periodic:
            return self.x_min + self.spacing * j
        # endpoint-weighted form: exact endpoints, and exactly antisymmetric when x_min = -x_max
        m = self.n_points - 1
        return (self.x_min * (m - j) + self.x_max * j) / m

    @property
    def weights(self) -> np.ndarray:
        """Quadrature weights: rectangle rule if periodic, trapezoid otherwise."""
        w = np.full(self.n_points, self.spacing)
        if not self.periodic:
            w[0] *= 0.5
            w[-1] *= 0.5
        return w

    def is_power_of_two(self) -> bool:
        n = self.n_points
        return n & (n - 1) == 0


@dataclass(frozen=True, eq=False)
class WaveFunction:
    """Complex samples of a state on a grid."""

    grid: Grid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        values = np.array(self.values, dtype=complex)
        if values.shape != (self.grid.n_points,):
            raise ShapeError(
                f"expected {self.grid.n_points} samples for the grid, got shape {values.shape}"
            )
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def x(self) -> np.ndarray:
        return self.grid.points

    def norm(self) -> float:
        return math.sqrt(max(inner_product(self, self).real, 0.0))

    def scaled(self, factor: complex) -> "WaveFunction":
        return WaveFunction(self.grid, factor * self.values)


def inner_product(a: WaveFunction, b: WaveFunction) -> complex:
    """Quadrature approximation of the integral of conj(a) * b.

    Real and imaginary parts are built from separate real products (no fused
    multiply-add), so swapping the arguments yields the exact conjugate.
    """
    if a.grid != b.grid:
        raise ShapeError(f"inner product of states on different grids: {a.grid} vs {b.grid}")
    ar, ai = a.values.real, a.values.imag
    br, bi = b.values.real, b.values.imag
    w = a.grid.weights
    re = np.sum(w * (ar * br + ai * bi))
    im = np.sum(w * (ar * bi - ai * br))
    return complex(re, im)
