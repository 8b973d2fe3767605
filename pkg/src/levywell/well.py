"""Infinite square well on [-l, l]: images, propagators, spectrum and parity forms.

The potential is taken as V = 0 for |x| < l and infinite otherwise. The well
propagator is built two ways:

* images: a sign-alternating sum of free kernels evaluated at the mirror
  images x_r of the final point (x_r = 2lr + x_b for even r, 2lr - x_b for
  odd r), one factor -1 per reflection;
* spectral: (1/l) sum_n exp(-i E_n t / hbar) sin(k_n (x_b - l)) sin(k_n (x_a - l))
  with k_n = n pi / (2l) and E_n = D_alpha (hbar k_n)^alpha.

Poisson summation turns the first into the second.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Optional

import numpy as np

from .core import FractionalParams, Grid, NumericalFailure, UsageError, WaveFunction
from .freekernel import (
    DEFAULT_TOLERANCE,
    KernelQuery,
    TimeType,
    free_kernel_extrapolated,
    free_kernel_values,
)

DEFAULT_IMAGES = 50
DEFAULT_MODES = 200

PAIRS = "pairs"
SYMMETRIC = "symmetric"


class Parity(str, Enum):
    EVEN = "even"
    ODD = "odd"


def _check_index(n) -> int:
    if int(n) != n or n < 1:
        raise UsageError(f"mode index must be an integer >= 1, got {n}")
    return int(n)


def wavenumber(n: int, l: float) -> float:
    return n * math.pi / (2.0 * l)


def energy(n: int, params: FractionalParams) -> float:
    return params.d_alpha * (n * math.pi * params.hbar / (2.0 * params.l)) ** params.alpha


@dataclass(frozen=True)
class EigenState:
    """Well eigenstate phi_n(x) = sin(k_n (x - l)) / sqrt(l) inside the well, 0 outside."""

    n: int
    k_n: float
    energy: float
    parity: Parity
    params: FractionalParams = field(repr=False)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        l = self.params.l
        inside = np.abs(x) < l
        return np.where(inside, np.sin(self.k_n * (x - l)), 0.0) / math.sqrt(l)

    def derivative(self, x):
        """One-sided interior derivative; at x = +-l it is the limit from inside."""
        x = np.asarray(x, dtype=float)
        l = self.params.l
        inside = np.abs(x) <= l
        return np.where(inside, self.k_n * np.cos(self.k_n * (x - l)), 0.0) / math.sqrt(l)


def eigenstate(n: int, params: FractionalParams) -> EigenState:
    n = _check_index(n)
    parity = Parity.EVEN if n % 2 == 1 else Parity.ODD
    return EigenState(n, wavenumber(n, params.l), energy(n, params), parity, params)


def eigenfunction_values(state: EigenState, grid: Grid) -> WaveFunction:
    l = state.params.l
    if grid.x_min > -l or grid.x_max < l:
        raise UsageError(f"grid [{grid.x_min}, {grid.x_max}] does not cover the well [-{l}, {l}]")
    return WaveFunction(grid, state(grid.points))


@dataclass(frozen=True)
class ParityForm:
    """phi_n rewritten as a signed sine (odd states) or cosine (even states)."""

    n: int
    parity: Parity
    j: int
    sign: int
    l: float

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self.parity is Parity.ODD:
            core = np.sin(self.j * math.pi * x / self.l)
        else:
            core = np.cos((2 * self.j + 1) * math.pi * x / (2.0 * self.l))
        return np.where(np.abs(x) < self.l, self.sign * core, 0.0) / math.sqrt(self.l)


def parity_form(n: int, params: FractionalParams) -> ParityForm:
    """n = 2j gives (-1)^j sin(j pi x / l); n = 2j + 1 gives (-1)^(j+1) cos((2j+1) pi x / (2l))."""
    n = _check_index(n)
    if n % 2 == 0:
        j = n // 2
        return ParityForm(n, Parity.ODD, j, (-1) ** j, params.l)
    j = (n - 1) // 2
    return ParityForm(n, Parity.EVEN, j, (-1) ** (j + 1), params.l)


def image_point(r: int, x_b, l: float):
    """Mirror image of x_b after r reflections off the walls at +-l."""
    if r % 2 == 0:
        return 2 * l * r + x_b
    return 2 * l * r - x_b


def _image_range(M: int, truncation: str) -> range:
    if M < 0 or int(M) != M:
        raise UsageError(f"image truncation must be a non-negative integer, got {M}")
    if truncation == SYMMETRIC:
        return range(-M, M + 1)
    if truncation == PAIRS:
        return range(-2 * M, 2 * M + 2)
    raise UsageError(f"unknown image truncation {truncation!r}; use 'pairs' or 'symmetric'")


def _check_inside(x, l, name):
    if np.any(np.abs(x) > l):
        raise UsageError(f"{name} must lie in the well [-{l}, {l}]")


def well_kernel_images(
    x_b,
    x_a,
    t: float,
    M: int,
    params: FractionalParams,
    time_type=TimeType.IMAGINARY,
    truncation: str = PAIRS,
    quad_tolerance: float = DEFAULT_TOLERANCE,
    etas=None,
):
    """Sign-alternating image sum of free kernels.

    ``truncation='pairs'`` sums the complete reflection pairs
    r = 2m, 2m + 1 for |m| <= M (r from -2M to 2M + 1), which cancel
    exactly at the walls; ``'symmetric'`` sums r from -M to M, so M = 0 is
    the bare free kernel. Real-time terms use the eta-extrapolated kernel.
    Accepts broadcastable arrays of positions.
    """
    time_type = TimeType(time_type)
    l = params.l
    x_b = np.asarray(x_b, dtype=float)
    x_a = np.asarray(x_a, dtype=float)
    _check_inside(x_b, l, "x_b")
    _check_inside(x_a, l, "x_a")
    if not t > 0:
        raise UsageError(f"image-sum kernel needs t > 0, got {t}")
    x_b, x_a = np.broadcast_arrays(x_b, x_a)
    rs = list(_image_range(M, truncation))
    dx = np.stack([image_point(r, x_b, l) - x_a for r in rs])
    signs = np.array([(-1) ** (r % 2) for r in rs], dtype=float)

    q = KernelQuery(0.0, 0.0, t, time_type, quad_tolerance=quad_tolerance)
    try:
        if time_type is TimeType.IMAGINARY:
            values = free_kernel_values(dx, q, params)
        else:
            values = _extrapolated_values(dx, q, params, etas)
    except NumericalFailure as exc:
        bad = exc.diagnostics.get("dx")
        r_bad = None
        if bad is not None:
            hits = np.flatnonzero(np.isclose(np.abs(dx), abs(bad)).reshape(len(rs), -1).any(axis=1))
            r_bad = [rs[i] for i in hits]
        raise NumericalFailure(f"free kernel failed for image index r in {r_bad}: {exc}", estimate=exc.estimate, images=r_bad) from exc
    # add from the far images inwards
    out = np.tensordot(signs[::-1], values[::-1], axes=1)
    if out.ndim == 0:
        return complex(out)
    return out


def _extrapolated_values(dx, q: KernelQuery, params, etas):
    uniq, inverse = np.unique(np.abs(dx), return_inverse=True)
    vals = []
    for u in uniq:
        try:
            vals.append(free_kernel_extrapolated(KernelQuery(float(u), 0.0, q.t, TimeType.REAL, quad_tolerance=q.quad_tolerance), params, etas).value)
        except NumericalFailure as exc:
            exc.diagnostics.setdefault("dx", float(u))
            raise
    return np.array(vals, dtype=complex)[inverse].reshape(dx.shape)


def _mode_table(x, N: int, params: FractionalParams) -> np.ndarray:
    """phi_n(x) for n = 1..N as an (N, len(x)) array; exactly 0 for |x| >= l."""
    l = params.l
    x = np.atleast_1d(np.asarray(x, dtype=float))
    k = wavenumber(np.arange(1, N + 1), l)
    inside = np.abs(x) < l
    return np.where(inside[None, :], np.sin(k[:, None] * (x[None, :] - l)), 0.0) / math.sqrt(l)


def _mode_factors(t: float, N: int, params: FractionalParams, time_type: TimeType) -> np.ndarray:
    e = energy(np.arange(1, N + 1), params)
    if time_type is TimeType.IMAGINARY:
        return np.exp(-e * t / params.hbar)
    return np.exp(-1j * e * t / params.hbar)


def well_kernel_spectral(x_b, x_a, t: float, N: int, params: FractionalParams, time_type=TimeType.IMAGINARY):
    """Truncated eigen-expansion of the well propagator.

    Zero for t < 0; t = 0 is the delta distribution and is refused.
    """
    time_type = TimeType(time_type)
    if int(N) != N or N < 1:
        raise UsageError(f"mode truncation must be an integer >= 1, got {N}")
    if t == 0:
        raise UsageError("t = 0: the propagator is delta(x_b - x_a), which has no pointwise value")
    l = params.l
    xb = np.asarray(x_b, dtype=float)
    xa = np.asarray(x_a, dtype=float)
    _check_inside(xb, l, "x_b")
    _check_inside(xa, l, "x_a")
    xb, xa = np.broadcast_arrays(xb, xa)
    shape = xb.shape
    if t < 0:
        out = np.zeros(shape, dtype=complex)
        return complex(out) if out.ndim == 0 else out
    factors = _mode_factors(t, int(N), params, time_type)
    phi_b = _mode_table(xb.ravel(), int(N), params)
    phi_a = _mode_table(xa.ravel(), int(N), params)
    out = np.einsum("n,ni,ni->i", factors.astype(complex), phi_b, phi_a).reshape(shape)
    return complex(out) if out.ndim == 0 else out


def ordered_kernel(x_b, t_b: float, x_a, t_a: float, params: FractionalParams, N: int = DEFAULT_MODES, time_type=TimeType.REAL):
    """Well propagator with the time-ordering convention: zero when t_b < t_a."""
    return well_kernel_spectral(x_b, x_a, t_b - t_a, N, params, time_type)


@dataclass(frozen=True, eq=False)
class PropagatorMatrix:
    """Dense K(x_i, t + dt | x_j, t) on a bounded grid spanning [-l, l]."""

    grid: Grid
    dt: float
    time_type: TimeType
    method: str
    truncation: Optional[int]
    entries: np.ndarray = field(repr=False)

    def apply(self, values: np.ndarray) -> np.ndarray:
        """Quadrature form of int K(x_i | y) f(y) dy."""
        return self.entries @ (self.grid.weights * values)


def propagator_matrix(
    grid: Grid,
    dt: float,
    params: FractionalParams,
    method: str = "spectral",
    time_type=TimeType.IMAGINARY,
    modes: int = DEFAULT_MODES,
    images: int = DEFAULT_IMAGES,
    truncation: str = PAIRS,
    quad_tolerance: float = DEFAULT_TOLERANCE,
) -> PropagatorMatrix:
    """Assemble a propagator matrix by the spectral, images or free method."""
    time_type = TimeType(time_type)
    l = params.l
    if grid.periodic or not (math.isclose(grid.x_min, -l) and math.isclose(grid.x_max, l)):
        raise UsageError(f"propagator matrices need a bounded grid spanning exactly [-{l}, {l}]")
    x = grid.points
    if method == "spectral":
        if dt == 0:
            raise UsageError("dt = 0: the propagator is the delta distribution")
        phi = _mode_table(x, modes, params)
        factors = _mode_factors(dt, modes, params, time_type) if dt > 0 else np.zeros(modes)
        entries = (phi.T * factors) @ phi
        # K(x, y) = K(y, x); BLAS rounding need not respect that
        entries = 0.5 * (entries + entries.T)
        if time_type is TimeType.IMAGINARY:
            entries = entries.real.astype(complex)
        return PropagatorMatrix(grid, dt, time_type, method, modes, entries.astype(complex))
    if method == "images":
        entries = well_kernel_images(x[:, None], x[None, :], dt, images, params, time_type, truncation, quad_tolerance)
        return PropagatorMatrix(grid, dt, time_type, method, images, np.asarray(entries, dtype=complex))
    if method == "free":
        q = KernelQuery(0.0, 0.0, dt, time_type, quad_tolerance=quad_tolerance)
        if time_type is TimeType.IMAGINARY:
            entries = free_kernel_values(x[:, None] - x[None, :], q, params)
        else:
            entries = _extrapolated_values(x[:, None] - x[None, :], q, params, None)
        return PropagatorMatrix(grid, dt, time_type, method, None, entries)
    raise UsageError(f"unknown propagator method {method!r}; use 'spectral', 'images' or 'free'")


def gram_matrix(n_max: int, grid: Grid, params: FractionalParams) -> np.ndarray:
    """Quadrature overlaps <phi_m, phi_n> for m, n <= n_max."""
    if int(n_max) != n_max or n_max < 1:
        raise UsageError(f"n_max must be an integer >= 1, got {n_max}")
    phi = _mode_table(grid.points, int(n_max), params)
    return (phi * grid.weights) @ phi.T
