"""Nonlocality residual of the zero-extended well eigenfunctions.

For each mode the residual r(x) = -D (hbar nabla)^alpha phi_n(x) - E_n phi_n(x)
is evaluated inside the well with the full-line operator acting on phi_n
extended by zero outside [-l, l]. At alpha = 2 it vanishes in the continuum
limit; for alpha < 2 it measures how far the piecewise eigenfunctions are
from solving the stationary equation for the nonlocal operator. The output
is a diagnostic and makes no claim about which reading of the well problem
is correct.

Spectral route
--------------
The zero extension has derivative jumps at +-l, which the FFT resolves only
to first order. They are removed by subtracting a combination of
(1 - u^2)_+, u (1 - u^2)_+, (1 - u^2)_+^2 and u (1 - u^2)_+^2 (u = x / l)
matching the one-sided first and second derivatives at both walls. The
fractional Laplacian of these is known in closed form (Dyda, 2012) as a
Gauss hypergeometric function. The smoother remainder goes through the FFT,
and the remainder's periodic copies are subtracted with a Hurwitz-zeta
lattice sum.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np
from scipy import special

from .core import FractionalParams, Grid, UsageError, WaveFunction, make_params
from .riesz import SINGULAR, RieszMethod, periodic_image_correction, riesz_singular, riesz_spectral
from .well import EigenState, eigenstate

CLASSICAL_LIMIT_TOLERANCE = 1e-3
WRAP_TOLERANCE = 1e-6
MIN_SPECTRAL_PADDING = 4.0


def fractional_laplacian_even(u, alpha: float, p: int):
    """(-Delta)^(alpha/2) of (1 - u^2)_+^p at |u| < 1."""
    u = np.asarray(u, dtype=float)
    const = (
        2.0**alpha * special.gamma(0.5 * (1 + alpha)) * special.gamma(p + 1)
        / (special.gamma(0.5) * special.gamma(p + 1 - 0.5 * alpha))
    )
    return const * special.hyp2f1(0.5 * (1 + alpha), 0.5 * alpha - p, 0.5, u * u)


def fractional_laplacian_odd(u, alpha: float, p: int):
    """(-Delta)^(alpha/2) of u (1 - u^2)_+^p at |u| < 1."""
    u = np.asarray(u, dtype=float)
    const = (
        2.0**alpha * special.gamma(0.5 * (3 + alpha)) * special.gamma(p + 1)
        / (special.gamma(1.5) * special.gamma(p + 1 - 0.5 * alpha))
    )
    return const * u * special.hyp2f1(0.5 * (3 + alpha), 0.5 * alpha - p, 1.5, u * u)


def _wall_polynomial(state: EigenState, phase: complex):
    """Coefficients (a, b, c, d) of the kink-carrying polynomial in u = x / l."""
    l = state.params.l
    slope_r = l * phase * state.derivative(l)
    slope_l = l * phase * state.derivative(-l)
    # phi'' = -k^2 phi, taken as the limit from inside the well
    curv_r, curv_l = (
        -((state.k_n * l) ** 2) * phase * math.sin(state.k_n * (wall - l)) / math.sqrt(l) for wall in (l, -l)
    )
    a = (slope_l - slope_r) / 4.0
    b = -(slope_r + slope_l) / 4.0
    c = (curv_r + curv_l + 4.0 * a) / 16.0
    d = (curv_r - curv_l + 12.0 * b) / 16.0
    return a, b, c, d


def _wall_polynomial_values(x, l, coeffs):
    a, b, c, d = coeffs
    u = np.asarray(x, dtype=float) / l
    w = np.where(np.abs(u) < 1.0, 1.0 - u * u, 0.0)
    return a * w + b * u * w + c * w * w + d * u * w * w


def _spectral_riesz(state, grid, params, phase, mask):
    """(hbar nabla)^alpha phi on grid points in ``mask`` plus the wrap-correction error estimate."""
    l, alpha = params.l, params.alpha
    x = grid.points
    coeffs = _wall_polynomial(state, phase)
    remainder = phase * state(x) - _wall_polynomial_values(x, l, coeffs)
    q = WaveFunction(grid, remainder)
    periodic = riesz_spectral(q, params).values
    correction = periodic_image_correction(q, params, (-l, l))
    # same correction from every second node estimates its quadrature error
    coarse_grid = Grid(grid.x_min, grid.x_max, grid.n_points // 2, periodic=True)
    coarse = periodic_image_correction(WaveFunction(coarse_grid, remainder[::2]), params, (-l, l))
    fine_even = correction[::2]
    even_mask = mask[::2]
    wrap_err = float(np.max(np.abs(fine_even[even_mask] - coarse[even_mask]), initial=0.0))

    u = x[mask] / l
    a, b, c, d = coeffs
    lap = (
        a * fractional_laplacian_even(u, alpha, 1)
        + b * fractional_laplacian_odd(u, alpha, 1)
        + c * fractional_laplacian_even(u, alpha, 2)
        + d * fractional_laplacian_odd(u, alpha, 2)
    )
    analytic = -(params.hbar**alpha) * l ** (-alpha) * lap
    return periodic[mask] - correction[mask] + analytic, wrap_err


def _singular_riesz(state, grid, params, phase, mask, method):
    if params.alpha == 2.0 and method.fd_step is None:
        # the local limit: second-order central differences at the grid spacing
        method = replace(method, fd_step=grid.spacing, fd_order=2)
    l = params.l
    if phase == 1.0:
        psi = lambda y: float(state(y))
    else:
        psi = lambda y: phase * float(state(y))
    return np.array([riesz_singular(psi, xi, params, method, support=(-l, l)) for xi in grid.points[mask]])


@dataclass(frozen=True, eq=False)
class ResidualReport:
    """Residual of the stationary equation for one zero-extended eigenfunction."""

    n: int
    alpha: float
    params: FractionalParams
    method: RieszMethod
    padding_factor: float
    interior_margin: float
    n_points: int
    x: np.ndarray = field(repr=False)
    residual_field: np.ndarray = field(repr=False)
    l2_rel: float = 0.0
    sup_rel: float = 0.0
    wrap_estimate: float = 0.0
    convergence_flags: dict = field(default_factory=dict)
    label: str = "diagnostic"

    def summary(self) -> dict:
        return {
            "n": self.n,
            "alpha": self.alpha,
            "params": self.params.as_dict(),
            "method": self.method.as_dict(),
            "padding_factor": self.padding_factor,
            "interior_margin": self.interior_margin,
            "n_points": self.n_points,
            "l2_rel": self.l2_rel,
            "sup_rel": self.sup_rel,
            "wrap_estimate": self.wrap_estimate,
            "convergence_flags": dict(self.convergence_flags),
            "label": self.label,
        }


def fse_residual(
    n: int,
    params: FractionalParams,
    n_points: int = 4096,
    padding_factor: float = 4.0,
    interior_margin: float = 0.05,
    method: Optional[RieszMethod] = None,
    phase: complex = 1.0,
    check_convergence: bool = False,
) -> ResidualReport:
    """Residual of -D (hbar nabla)^alpha phi_n - E_n phi_n inside the well.

    phi_n (times ``phase``) is extended by zero onto a periodic grid of
    ``n_points`` nodes and width ``padding_factor * 2l``; the residual is
    reported on nodes with |x| <= l (1 - interior_margin). ``l2_rel`` and
    ``sup_rel`` are normalised by E_n times the matching norm of phi_n on
    the same nodes.

    With ``check_convergence`` the computation is repeated with doubled
    padding at the same spacing and with doubled resolution, and the
    relative changes of ``l2_rel`` are recorded.
    """
    method = method or RieszMethod.spectral()
    state = eigenstate(n, params)
    if not padding_factor >= 2.0:
        raise UsageError(f"padding_factor must be >= 2, got {padding_factor}")
    if not 0.0 <= interior_margin < 0.5:
        raise UsageError(f"interior_margin must lie in [0, 0.5), got {interior_margin}")
    if method.variant != SINGULAR and padding_factor < MIN_SPECTRAL_PADDING:
        raise UsageError(
            f"spectral residual needs padding_factor >= {MIN_SPECTRAL_PADDING:g}, got {padding_factor:g}; "
            "increase the padding"
        )
    l = params.l
    grid = Grid.ring(padding_factor * 2.0 * l, n_points)
    x = grid.points
    mask = (np.abs(x) <= l * (1.0 - interior_margin)) & (np.abs(x) < l)
    phi = phase * state(x[mask])

    if method.variant == SINGULAR:
        riesz = _singular_riesz(state, grid, params, phase, mask, method)
        wrap_err = 0.0
    else:
        riesz, wrap_err = _spectral_riesz(state, grid, params, phase, mask)
        wrap_err *= params.d_alpha / (state.energy * float(np.max(np.abs(phi), initial=0.0)))
        if wrap_err > WRAP_TOLERANCE:
            raise UsageError(
                f"periodic wrap-around estimate {wrap_err:.3g} exceeds {WRAP_TOLERANCE:g} of E_n; "
                "increase padding_factor"
            )

    r = -params.d_alpha * riesz - state.energy * phi
    denom = state.energy * math.sqrt(float(np.sum(np.abs(phi) ** 2)))
    l2_rel = math.sqrt(float(np.sum(np.abs(r) ** 2))) / denom if denom > 0 else math.inf
    sup_rel = float(np.max(np.abs(r), initial=0.0)) / (state.energy * float(np.max(np.abs(phi), initial=0.0)))

    flags = {}
    if check_convergence:
        kw = dict(interior_margin=interior_margin, method=method, phase=phase)
        padded = fse_residual(n, params, 2 * n_points, 2 * padding_factor, **kw).l2_rel
        refined = fse_residual(n, params, 2 * n_points, padding_factor, **kw).l2_rel
        flags = {
            "l2_rel_padding_doubled": padded,
            "l2_rel_refined": refined,
            "padding_rel_change": _rel_change(l2_rel, padded),
            "refinement_rel_change": _rel_change(l2_rel, refined),
        }
        flags["padding_stable"] = flags["padding_rel_change"] < 0.1 or max(l2_rel, padded) < 1e-6
        flags["refinement_stable"] = flags["refinement_rel_change"] < 0.1 or max(l2_rel, refined) < 1e-6

    return ResidualReport(
        n=state.n,
        alpha=params.alpha,
        params=params,
        method=method,
        padding_factor=float(padding_factor),
        interior_margin=float(interior_margin),
        n_points=grid.n_points,
        x=x[mask],
        residual_field=r,
        l2_rel=l2_rel,
        sup_rel=sup_rel,
        wrap_estimate=wrap_err,
        convergence_flags=flags,
    )


def _rel_change(a: float, b: float) -> float:
    return abs(b - a) / abs(a) if a != 0 else math.inf


def residual_sweep(
    n_list: Sequence[int], alpha_list: Sequence[float], params: FractionalParams, **kwargs
) -> list[dict]:
    """One summary row per (n, alpha), alpha outer, n inner."""
    rows = []
    for alpha in alpha_list:
        p = make_params(alpha, params.d_alpha, params.hbar, params.l)
        for n in n_list:
            report = fse_residual(n, p, **kwargs)
            row = report.summary()
            row["classical_limit_ok"] = report.l2_rel < CLASSICAL_LIMIT_TOLERANCE if alpha == 2.0 else None
            rows.append(row)
    return rows
