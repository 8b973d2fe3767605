"""Free-particle Levy kernel in the momentum representation.

    K0(x_b, t | x_a, 0) = (1 / pi hbar) int_0^inf cos(p dx / hbar)
                              exp(-i D t p^alpha / hbar) dp

In imaginary time the phase becomes the damping exp(-D tau p^alpha / hbar)
and the kernel is the symmetric alpha-stable density. In real time the
integral converges only conditionally; it is regularised with an extra
factor exp(-eta p^alpha) and the eta -> 0 limit is taken by Richardson
extrapolation. The regularisation is a choice made here, not part of the
kernel's definition.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Optional, Sequence

import numpy as np
from scipy import integrate, special

from .core import FractionalParams, NumericalFailure, UsageError


class TimeType(str, Enum):
    REAL = "real"
    IMAGINARY = "imaginary"


DEFAULT_TOLERANCE = 1e-9
DEFAULT_ETAS = tuple(0.1 * 2.0**-j for j in range(5))
MAX_PANELS = 200_000


@dataclass(frozen=True)
class KernelQuery:
    """Arguments of one free-kernel evaluation.

    ``t`` is the elapsed time t_b - t_a (or imaginary time tau). ``p_cutoff``
    of ``None`` picks the truncation from the damping and ``quad_tolerance``.
    """

    x_b: float
    x_a: float
    t: float
    time_type: TimeType = TimeType.IMAGINARY
    damping_eta: float = 0.0
    p_cutoff: Optional[float] = None
    quad_tolerance: float = DEFAULT_TOLERANCE

    def __post_init__(self):
        object.__setattr__(self, "time_type", TimeType(self.time_type))
        if not self.t >= 0:
            raise UsageError(
                f"elapsed time must be >= 0, got {self.t}; the kernel vanishes for t_b < t_a "
                "(use well.ordered_kernel for that convention)"
            )
        if not self.damping_eta >= 0:
            raise UsageError(f"damping_eta must be >= 0, got {self.damping_eta}")
        if not self.quad_tolerance > 0:
            raise UsageError(f"quad_tolerance must be positive, got {self.quad_tolerance}")
        if self.p_cutoff is not None and not self.p_cutoff > 0:
            raise UsageError(f"p_cutoff must be positive, got {self.p_cutoff}")

    @property
    def dx(self) -> float:
        return self.x_b - self.x_a

    def damping_rate(self, params: FractionalParams) -> float:
        """Coefficient of p^alpha in the real decaying exponent."""
        if self.time_type is TimeType.IMAGINARY:
            return params.d_alpha * self.t / params.hbar + self.damping_eta
        return self.damping_eta

    def cutoff(self, params: FractionalParams) -> float:
        """Momentum truncation; checks the damped tail bound for a given cutoff."""
        rate = self.damping_rate(params)
        tol = self.quad_tolerance
        alpha = params.alpha
        if self.p_cutoff is not None:
            if self.time_type is TimeType.REAL and self.damping_eta > 0:
                bound = math.exp(-self.damping_eta * self.p_cutoff**alpha) / self.damping_eta
                if bound > tol:
                    raise UsageError(
                        f"p_cutoff {self.p_cutoff} leaves a damped tail bound {bound:.3g} above "
                        f"quad_tolerance {tol:.3g}"
                    )
            return self.p_cutoff
        if rate <= 0:
            raise UsageError("undamped real-time kernel needs eta > 0 (see free_kernel_extrapolated)")
        if self.time_type is TimeType.REAL:
            log_term = math.log(1.0 / (rate * tol)) if rate * tol < 1 else 1.0
        else:
            log_term = math.log(1.0 / tol) + 8.0
        return (max(log_term, 1.0) / rate) ** (1.0 / alpha)


def _imaginary_value(dx: float, rate: float, cutoff: float, params: FractionalParams, tol: float) -> float:
    alpha, hbar = params.alpha, params.hbar
    omega = abs(dx) / hbar

    def f(p):
        return math.exp(-rate * p**alpha)

    kw = dict(epsabs=tol * math.pi * hbar, epsrel=1e-12, limit=1000, full_output=1)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        if omega == 0.0:
            res = integrate.quad(f, 0.0, cutoff, **kw)
        else:
            res = integrate.quad(f, 0.0, cutoff, weight="cos", wvar=omega, **kw)
    value, err = res[0], res[1]
    if len(res) == 4 and err > 10 * tol * math.pi * hbar:
        raise NumericalFailure(f"free kernel quadrature failed at dx = {dx}", estimate=err / (math.pi * hbar), dx=dx)
    return value / (math.pi * hbar)


_GL16 = np.polynomial.legendre.leggauss(16)
_GL32 = np.polynomial.legendre.leggauss(32)


def _gauss(f, a, b, rule):
    nodes, weights = rule
    half = 0.5 * (b - a)
    mid = 0.5 * (b + a)
    p = mid[:, None] + half[:, None] * nodes[None, :]
    return half * (f(p) @ weights)


def _phase_panels(phase, p_max: float, n_panels: int) -> np.ndarray:
    """Edges where the monotone cumulative phase crosses multiples of pi."""
    targets = np.pi * np.arange(1, n_panels)
    lo = np.zeros_like(targets)
    hi = np.full_like(targets, p_max)
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        below = phase(mid) < targets
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    return np.concatenate(([0.0], 0.5 * (lo + hi), [p_max]))


def _real_value(dx: float, eta: float, cutoff: float, params: FractionalParams, t: float, tol: float) -> complex:
    """Adaptive Gauss-Legendre on panels holding about pi of phase each."""
    alpha, hbar, d = params.alpha, params.hbar, params.d_alpha
    omega = abs(dx) / hbar
    chirp = d * t / hbar

    def f(p):
        return np.cos(omega * p) * np.exp(-(eta + 1j * chirp) * p**alpha)

    def phase(p):
        return chirp * p**alpha + omega * p

    n_panels = int(math.ceil(phase(cutoff) / math.pi)) + 1
    if n_panels > MAX_PANELS:
        raise NumericalFailure(
            f"real-time kernel at dx = {dx} needs {n_panels} quadrature panels (limit {MAX_PANELS}); "
            "the separation is too large for the damping regularisation",
            dx=dx,
        )
    edges = _phase_panels(phase, cutoff, n_panels)
    # grade the first panel geometrically: p^alpha is not smooth at p = 0
    first = edges[1] * 2.0 ** -np.arange(40, 0, -1)
    edges = np.unique(np.concatenate(([0.0], first, edges[1:])))
    a, b = edges[:-1], edges[1:]

    total = 0.0 + 0.0j
    err_total = 0.0
    span = cutoff
    for _ in range(40):
        coarse = _gauss(f, a, b, _GL16)
        fine = _gauss(f, a, b, _GL32)
        err = np.abs(fine - coarse)
        ok = err <= tol * math.pi * hbar * (b - a) / span
        total += fine[ok].sum()
        err_total += err[ok].sum()
        if ok.all():
            break
        a, b = a[~ok], b[~ok]
        m = 0.5 * (a + b)
        a, b = np.concatenate((a, m)), np.concatenate((m, b))
    else:
        raise NumericalFailure(
            f"real-time kernel quadrature did not converge at dx = {dx}",
            estimate=float(np.abs(fine - coarse).sum() / (math.pi * hbar)),
            dx=dx,
        )
    return complex(total / (math.pi * hbar))


def _evaluate(dx: float, q: KernelQuery, params: FractionalParams) -> complex:
    if q.t == 0:
        raise UsageError("the kernel at t_b = t_a is the distribution delta(x_b - x_a); no pointwise value")
    cutoff = q.cutoff(params)
    if q.time_type is TimeType.IMAGINARY:
        return complex(_imaginary_value(dx, q.damping_rate(params), cutoff, params, q.quad_tolerance))
    if q.damping_eta <= 0:
        raise UsageError("real-time kernel needs damping_eta > 0; use free_kernel_extrapolated for eta -> 0")
    return _real_value(dx, q.damping_eta, cutoff, params, q.t, q.quad_tolerance)


def free_kernel(q: KernelQuery, params: FractionalParams) -> complex:
    """Free Levy kernel K0(x_b, t | x_a, 0) for one query."""
    return _evaluate(q.dx, q, params)


def free_kernel_values(dx, q: KernelQuery, params: FractionalParams) -> np.ndarray:
    """Kernel at many separations sharing the time and numerical settings of ``q``.

    The kernel is even in dx, so each distinct |dx| is evaluated once.
    """
    dx = np.asarray(dx, dtype=float)
    uniq, inverse = np.unique(np.abs(dx), return_inverse=True)
    vals = np.array([_evaluate(float(u), q, params) for u in uniq], dtype=complex)
    return vals[inverse].reshape(dx.shape)


@dataclass(frozen=True)
class ExtrapolatedKernel:
    value: complex
    error: float
    etas: tuple
    table: list = field(repr=False)


def richardson(samples: Sequence[complex], ratio: float = 2.0) -> list:
    """Richardson table for values at geometrically shrinking step sizes.

    Assumes an error expansion in integer powers of the step size.
    """
    table = [list(samples)]
    for k in range(1, len(samples)):
        prev = table[-1]
        factor = ratio**k - 1.0
        table.append([prev[j] + (prev[j] - prev[j - 1]) / factor for j in range(1, len(prev))])
    return table


def default_etas(q: KernelQuery, params: FractionalParams) -> tuple:
    """Damping ladder eta_0 2^-j, j = 0..4, inside the regime where the bias is polynomial in eta.

    The damping enters as (eta + i D t / hbar) p^alpha, so the expansion
    parameter is eta p*^alpha at the stationary-phase momentum p*, or
    eta hbar / (D t) when p* is small. eta_0 is 0.1 unless either of these
    would exceed its bound.
    """
    alpha = params.alpha
    chirp = params.d_alpha * q.t / params.hbar
    omega = abs(q.dx) / params.hbar
    eta0 = min(DEFAULT_ETAS[0], 0.2 * chirp)
    if omega > 0 and alpha > 1.0:
        p_star = (omega / (alpha * chirp)) ** (1.0 / (alpha - 1.0))
        eta0 = min(eta0, 0.5 / p_star**alpha)
    return tuple(eta0 * 2.0**-j for j in range(len(DEFAULT_ETAS)))


def free_kernel_extrapolated(
    q: KernelQuery, params: FractionalParams, etas: Optional[Sequence[float]] = None
) -> ExtrapolatedKernel:
    """eta -> 0 limit of the damped kernel by Richardson extrapolation.

    ``etas`` must halve from one entry to the next and hold at least four
    values; ``None`` picks :func:`default_etas`. The error estimate is the
    last increment along the diagonal. For alpha < 2 the real-time kernel
    grows with the separation and needs ever smaller eta; when the damped
    integral becomes too long a :class:`NumericalFailure` is raised.
    """
    if q.t == 0:
        raise UsageError(
            "t = 0: the kernel is delta(x_b - x_a) and the damped integrals only concentrate; "
            "use the delta convention instead"
        )
    etas = tuple(default_etas(q, params) if etas is None else etas)
    if len(etas) < 4:
        raise UsageError("eta sequence needs at least four entries")
    for e0, e1 in zip(etas, etas[1:]):
        if not e0 > 0 or not math.isclose(e1, 0.5 * e0, rel_tol=1e-12):
            raise UsageError(f"eta sequence must halve at every step, got {etas}")
    samples = [free_kernel(replace(q, damping_eta=eta), params) for eta in etas]
    table = richardson(samples)
    last_row = [col[-1] for col in table]
    increments = [abs(b - a) for a, b in zip(last_row, last_row[1:])]
    floor = 100.0 * q.quad_tolerance
    # an early hump is tolerated; the final steps must contract
    last, prev, first = increments[-1], increments[-2], increments[0]
    if last > floor and (last > prev or last > first):
        raise NumericalFailure(
            "Richardson table does not converge monotonically",
            estimate=last,
            increments=increments,
            etas=etas,
        )
    return ExtrapolatedKernel(last_row[-1], float(increments[-1]), etas, table)


@dataclass(frozen=True)
class NormalizationResult:
    total: float
    window_mass: float
    tail_mass: float
    window: float
    window_too_narrow: bool


def stable_tail_mass(params: FractionalParams, tau: float, window: float, max_terms: int = 8) -> float:
    """Mass of the imaginary-time kernel beyond distance ``window`` (both sides).

    Integrates the large-|x| expansion of the symmetric stable density term
    by term, stopping once terms stop shrinking.
    """
    alpha = params.alpha
    scale = params.d_alpha * tau * params.hbar ** (alpha - 1.0)
    total = 0.0
    prev = math.inf
    for k in range(1, max_terms + 1):
        term = (
            (-1) ** (k + 1)
            * special.gamma(k * alpha + 1.0)
            / math.factorial(k)
            * math.sin(0.5 * k * math.pi * alpha)
            * scale**k
            * window ** (-k * alpha)
            / (k * alpha)
        )
        if abs(term) > prev:
            break
        total += term
        prev = abs(term)
    return 2.0 * total / math.pi


def free_kernel_normalization(
    q: KernelQuery, params: FractionalParams, window: float = 40.0, tolerance: float = 1e-6
) -> NormalizationResult:
    """Total mass of the imaginary-time kernel over x_b; ideally 1.

    The kernel is integrated numerically over [x_a - window, x_a + window];
    the power-law tails beyond are added from their asymptotic expansion.
    ``window_too_narrow`` flags a tail contribution above ``tolerance``.
    """
    if q.time_type is not TimeType.IMAGINARY:
        raise UsageError("normalization is checked for imaginary time only")
    if not window > 0:
        raise UsageError(f"window must be positive, got {window}")
    width = (params.d_alpha * q.t * params.hbar ** (params.alpha - 1.0)) ** (1.0 / params.alpha)
    breaks = [b for b in (width, 5 * width, 25 * width) if b < window]

    def density(s):
        return _evaluate(s, q, params).real

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        res = integrate.quad(density, 0.0, window, epsabs=1e-10, epsrel=1e-10, limit=400, points=breaks, full_output=1)
    if len(res) == 4 and res[1] > 1e-7:
        raise NumericalFailure("normalization quadrature did not converge", estimate=res[1])
    window_mass = 2.0 * res[0]
    tail = stable_tail_mass(params, q.t, window)
    return NormalizationResult(window_mass + tail, window_mass, tail, window, abs(tail) > tolerance)
