"""The quantum Riesz operator (hbar nabla)^alpha by two independent routes.

The spectral route multiplies by -|p|^alpha in the discrete Fourier basis of a
periodic grid. The singular-integral route evaluates the equivalent
real-space form

    (hbar nabla)^alpha psi(x) = -hbar^alpha C(alpha)
        * int_0^inf [2 psi(x) - psi(x+y) - psi(x-y)] / y^(1+alpha) dy

with C(alpha) = 2^alpha Gamma((1+alpha)/2) / (sqrt(pi) |Gamma(-alpha/2)|),
pointwise by adaptive quadrature.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy import integrate, special

from .core import FractionalParams, Grid, NumericalFailure, UsageError, WaveFunction

SPECTRAL = "spectral"
SINGULAR = "singular"


@dataclass(frozen=True)
class RieszMethod:
    """Selects how the Riesz operator is applied.

    For the singular-integral variant ``cutoff_radius`` is the radius beyond
    which the y-integral is done analytically (``None``: the support reach of
    psi at the evaluation point), ``inner_tolerance`` the absolute quadrature
    tolerance, and ``fd_step``/``fd_order`` configure the finite-difference
    fallback used at alpha = 2.
    """

    variant: str = SPECTRAL
    cutoff_radius: Optional[float] = None
    inner_tolerance: float = 1e-9
    fd_step: Optional[float] = None
    fd_order: int = 4

    def __post_init__(self):
        if self.variant not in (SPECTRAL, SINGULAR):
            raise UsageError(f"unknown Riesz method {self.variant!r}; use 'spectral' or 'singular'")
        if self.cutoff_radius is not None and not self.cutoff_radius > 0:
            raise UsageError(f"cutoff_radius must be positive, got {self.cutoff_radius}")
        if not 0 < self.inner_tolerance <= 1e-2:
            raise UsageError(f"inner_tolerance must lie in (0, 1e-2], got {self.inner_tolerance}")
        if self.fd_step is not None and not self.fd_step > 0:
            raise UsageError(f"fd_step must be positive, got {self.fd_step}")
        if self.fd_order not in (2, 4):
            raise UsageError(f"fd_order must be 2 or 4, got {self.fd_order}")

    @classmethod
    def spectral(cls) -> "RieszMethod":
        return cls(SPECTRAL)

    @classmethod
    def singular(cls, cutoff_radius=None, inner_tolerance=1e-9, fd_step=None, fd_order=4) -> "RieszMethod":
        return cls(SINGULAR, cutoff_radius, inner_tolerance, fd_step, fd_order)

    def as_dict(self) -> dict:
        return {
            "variant": self.variant,
            "cutoff_radius": self.cutoff_radius,
            "inner_tolerance": self.inner_tolerance,
            "fd_step": self.fd_step,
            "fd_order": self.fd_order,
        }


def riesz_constant(alpha: float) -> float:
    """Normalisation C(alpha) of the hypersingular integral; zero at alpha = 2."""
    return 2.0**alpha * special.gamma(0.5 * (1.0 + alpha)) / math.sqrt(math.pi) * abs(special.rgamma(-0.5 * alpha))


def _check_spectral_grid(grid: Grid) -> None:
    if not grid.periodic:
        raise UsageError("the spectral Riesz operator needs a periodic grid")
    if not grid.is_power_of_two():
        raise UsageError(f"the spectral Riesz operator needs a power-of-two grid, got {grid.n_points} points")


def momentum_lattice(grid: Grid, hbar: float) -> np.ndarray:
    """Momenta p_k = 2 pi hbar k / L in FFT order (Nyquist mode negative)."""
    return 2.0 * np.pi * hbar * np.fft.fftfreq(grid.n_points, d=grid.spacing)


def riesz_multiplier(grid: Grid, params: FractionalParams) -> np.ndarray:
    return np.abs(momentum_lattice(grid, params.hbar)) ** params.alpha


def riesz_spectral(psi: WaveFunction, params: FractionalParams) -> WaveFunction:
    """Apply (hbar nabla)^alpha on a periodic power-of-two grid."""
    _check_spectral_grid(psi.grid)
    out = -np.fft.ifft(riesz_multiplier(psi.grid, params) * np.fft.fft(psi.values))
    return WaveFunction(psi.grid, out)


def _image_lattice_kernel(w: np.ndarray, period: float, alpha: float) -> np.ndarray:
    """sum over m != 0 of |w + m L|^-(1+alpha), for |w| < L."""
    u = w / period
    s = 1.0 + alpha
    return period ** (-s) * (special.zeta(s, 1.0 + u) + special.zeta(s, 1.0 - u))


def periodic_image_correction(psi: WaveFunction, params: FractionalParams, support) -> np.ndarray:
    """Contribution of the periodic copies of a compactly supported state.

    On a ring of length L the spectral operator acts on the periodisation
    sum_m psi(x - m L). For points x inside ``support`` the copies m != 0 are
    far away, where the operator reduces to
    hbar^alpha C(alpha) int psi(z) / |x - z - m L|^(1+alpha) dz. The lattice
    sum over m is done in closed form with the Hurwitz zeta function and the
    z-integral with the grid's rectangle rule.

    Returns an array over the whole grid, zero outside ``support``; subtract
    it from :func:`riesz_spectral` to recover the full-line operator there.
    """
    _check_spectral_grid(psi.grid)
    lo, hi = support
    x = psi.grid.points
    inside = (x >= lo) & (x <= hi)
    out = np.zeros(psi.grid.n_points, dtype=complex)
    if params.alpha == 2.0 or not inside.any():
        return out
    if hi - lo >= psi.grid.length:
        raise UsageError("support must be narrower than the periodic domain")
    idx = np.flatnonzero(inside)
    m = idx.size
    h = psi.grid.spacing
    # the kernel depends only on the index difference: one convolution
    kernel = _image_lattice_kernel(h * np.arange(-(m - 1), m), psi.grid.length, params.alpha)
    f = psi.values[idx] * h
    conv = np.convolve(f, kernel)[m - 1 : 2 * m - 1]
    out[idx] = params.hbar**params.alpha * riesz_constant(params.alpha) * conv
    return out


def riesz_full_line(psi: WaveFunction, params: FractionalParams, support) -> WaveFunction:
    """Spectral operator with the periodic copies removed; valid inside ``support``."""
    out = riesz_spectral(psi, params).values - periodic_image_correction(psi, params, support)
    return WaveFunction(psi.grid, out)


def hamiltonian_matrix(grid: Grid, potential, params: FractionalParams) -> np.ndarray:
    """Dense H = -D_alpha (hbar nabla)^alpha + V on a periodic grid.

    Column j is the spectral operator applied to the j-th unit vector.
    """
    _check_spectral_grid(grid)
    v = np.broadcast_to(np.asarray(potential, dtype=float), (grid.n_points,))
    mult = riesz_multiplier(grid, params)
    kinetic = params.d_alpha * np.fft.ifft(mult[:, None] * np.fft.fft(np.eye(grid.n_points), axis=0), axis=0)
    return kinetic + np.diag(v).astype(complex)


def _quad(f, a, b, tol, **kw):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        res = integrate.quad(f, a, b, epsabs=tol, epsrel=tol, limit=400, full_output=1, **kw)
    value, err = res[0], res[1]
    if len(res) == 4 and err > 10 * tol:
        raise NumericalFailure(
            f"adaptive quadrature on [{a}, {b}] did not converge: {res[3].splitlines()[0]}",
            estimate=err,
        )
    return value


def _second_derivative(psi, x, step, order):
    if order == 2:
        return (psi(x + step) - 2.0 * psi(x) + psi(x - step)) / step**2
    return (
        -psi(x + 2 * step) + 16.0 * psi(x + step) - 30.0 * psi(x) + 16.0 * psi(x - step) - psi(x - 2 * step)
    ) / (12.0 * step**2)


def riesz_singular(
    psi: Callable[[float], complex],
    x: float,
    params: FractionalParams,
    method: Optional[RieszMethod] = None,
    support=None,
    second_derivative: Optional[Callable[[float], complex]] = None,
) -> complex:
    """Pointwise (hbar nabla)^alpha psi(x) from the hypersingular integral.

    ``psi`` must vanish outside ``support = (lo, hi)``. The y-integral is
    split at the distances from x to the support ends: the piece next to
    y = 0 is integrated against the algebraic weight y^(1-alpha) with the
    bracket divided by y^2 (a quadratic Taylor fit replaces it below a small
    radius where the subtraction cancels), the middle piece by plain adaptive
    quadrature, and the tail, where only 2 psi(x) survives, analytically.

    At alpha = 2 the operator is hbar^2 d^2/dx^2; ``second_derivative`` is
    used when given, otherwise a central finite difference.
    """
    method = method or RieszMethod.singular()
    alpha, hbar = params.alpha, params.hbar
    x = float(x)
    if alpha == 2.0:
        if second_derivative is not None:
            return complex(hbar**2 * second_derivative(x))
        if method.fd_step is not None:
            step = method.fd_step
        else:
            scale = 1.0 if support is None else 0.5 * (support[1] - support[0])
            step = 1e-3 * scale
        return complex(hbar**2 * _second_derivative(psi, x, step, method.fd_order))
    if alpha >= 2.0 or alpha <= 1.0:
        raise UsageError(f"the singular-integral form needs 1 < alpha < 2, got {alpha}")
    if support is None:
        raise UsageError("riesz_singular needs the compact support (lo, hi) of psi")
    lo, hi = float(support[0]), float(support[1])
    if not lo < hi:
        raise UsageError(f"support must satisfy lo < hi, got ({lo}, {hi})")
    if x == lo or x == hi:
        raise UsageError("evaluation point lies on the support boundary, where the operator may diverge")

    psi0 = complex(psi(x))
    parts = [np.real] if np.isrealobj(psi(x)) else [np.real, np.imag]
    tol = method.inner_tolerance
    total = 0.0 + 0.0j

    if x < lo or x > hi:
        near = min(abs(x - lo), abs(x - hi))
        far = max(abs(x - lo), abs(x - hi))
        for part, unit in zip(parts, (1.0, 1j)):
            f = lambda y: part(-psi(x + y) - psi(x - y)) / y ** (1.0 + alpha)
            total += unit * _quad(f, near, far, tol)
        return complex(-(hbar**alpha) * riesz_constant(alpha) * total)

    b1, b2 = sorted((x - lo, hi - x))
    radius = b2 if method.cutoff_radius is None else method.cutoff_radius
    if radius < b2:
        raise UsageError(f"cutoff_radius {radius} is smaller than the support reach {b2} at x = {x}")

    def bracket(y):
        return 2.0 * psi0 - psi(x + y) - psi(x - y)

    delta = 1e-2 * b1
    g1 = complex(bracket(delta)) / delta**2
    g2 = complex(bracket(2 * delta)) / (4 * delta**2)
    c2 = (g2 - g1) / (3 * delta**2)
    c0 = g1 - c2 * delta**2

    for part, unit in zip(parts, (1.0, 1j)):
        a0, a2 = part(c0), part(c2)

        def g(y, part=part, a0=a0, a2=a2):
            if y < delta:
                return a0 + a2 * y * y
            return part(bracket(y)) / (y * y)

        piece = _quad(g, 0.0, b1, tol, weight="alg", wvar=(1.0 - alpha, 0.0))
        if b2 > b1:
            piece += _quad(lambda y, part=part: part(bracket(y)) / y ** (1.0 + alpha), b1, b2, tol)
        if radius > b2:
            piece += _quad(lambda y, part=part: part(2.0 * psi0) / y ** (1.0 + alpha), b2, radius, tol)
        total += unit * piece
    total += 2.0 * psi0 * radius ** (-alpha) / alpha
    return complex(-(hbar**alpha) * riesz_constant(alpha) * total)
