"""Registry of invariant checks run by ``levywell verify`` and the acceptance tests.

Every check compares the library against a route it does not share code
with: closed-form kernels, analytic spectra, or a second numerical method.
Tolerances are pinned here; ``overrides`` exists so a test can corrupt one
and watch the check fail.
"""

from __future__ import annotations

import cmath
import math
import time
from dataclasses import dataclass, field
from typing import Callable, Mapping, Optional

import numpy as np

from .core import Grid, WaveFunction, make_params
from .evolution import SpectralCoefficients, evolve_by_kernel, evolve_spectral, expand, gaussian_packet, reconstruct
from .freekernel import KernelQuery, TimeType, free_kernel, free_kernel_extrapolated
from .residual import fse_residual
from .riesz import RieszMethod, hamiltonian_matrix, momentum_lattice, riesz_full_line, riesz_singular, riesz_spectral
from .well import eigenstate, energy, gram_matrix, parity_form, propagator_matrix
from .well import well_kernel_images, well_kernel_spectral

SEED = 20240611


@dataclass(frozen=True)
class Check:
    name: str
    criterion: int
    summary: str
    tolerances: Mapping[str, float]
    run: Callable[[Mapping[str, float]], dict] = field(repr=False)
    slow: bool = False


@dataclass(frozen=True)
class CheckResult:
    name: str
    criterion: int
    summary: str
    passed: bool
    measured: dict
    tolerances: dict
    seconds: float = 0.0

    def line(self) -> str:
        worst = ", ".join(f"{k}={v:.3g}" for k, v in self.measured.items() if isinstance(v, float))
        return f"{'PASS' if self.passed else 'FAIL'}  [{self.criterion:2d}] {self.name:<22s} {worst}"


# closed-form oracles, written independently of the library's quadrature


def _heat_kernel(dx, tau, d, hbar):
    return np.exp(-(dx**2) / (4.0 * hbar * d * tau)) / np.sqrt(4.0 * math.pi * hbar * d * tau)


def _cauchy_density(dx, tau, d, hbar):
    b = d * tau / hbar
    a = dx / hbar
    return b / (math.pi * hbar * (a * a + b * b))


def _fresnel_kernel(dx, t, d, hbar):
    return cmath.exp(1j * dx * dx / (4.0 * hbar * d * t)) / cmath.sqrt(4j * math.pi * hbar * d * t)


def _bump(x):
    x = np.asarray(x, dtype=float)
    inside = np.abs(x) < 1.0
    safe = np.where(inside, 1.0 - x * x, 1.0)
    return np.where(inside, np.exp(-1.0 / safe), 0.0)


# individual checks; each returns {metric: value, ..., "passed": bool}


def _riesz_plane_wave(tol):
    grid = Grid.ring(2.0 * math.pi, 256)
    worst = 0.0
    for alpha in (1.2, 1.5, 2.0):
        params = make_params(alpha)
        p = momentum_lattice(grid, params.hbar)
        for m in [1, 2, 3, 5, 7, 11, 13, 17, 23, 31, 40, 55, 64, 77, 100, 127]:
            psi = WaveFunction(grid, np.exp(1j * p[m] * grid.points / params.hbar))
            out = riesz_spectral(psi, params).values
            expected = -(abs(p[m]) ** alpha) * psi.values
            worst = max(worst, float(np.max(np.abs(out - expected)) / np.max(np.abs(expected))))
    return {"rel_error": worst, "passed": worst < tol["rel_error"]}


def _hermiticity(tol):
    grid = Grid.ring(2.0, 512)
    worst = 0.0
    for alpha in (1.2, 1.5, 2.0):
        h = hamiltonian_matrix(grid, 0.0, make_params(alpha))
        worst = max(worst, float(np.max(np.abs(h - h.conj().T))))
    return {"max_asymmetry": worst, "passed": worst < tol["max_asymmetry"]}


def _riesz_cross_method(tol):
    grid = Grid.ring(16.0, 4096)
    psi = WaveFunction(grid, _bump(grid.points))
    nodes = np.flatnonzero(np.abs(grid.points) <= 0.7)[::40]
    worst = 0.0
    for alpha in (1.2, 1.5, 1.8):
        params = make_params(alpha)
        spectral = riesz_full_line(psi, params, (-1.0, 1.0)).values[nodes].real
        singular = np.array([riesz_singular(_bump, float(grid.points[i]), params, support=(-1.0, 1.0)) for i in nodes])
        worst = max(worst, float(np.max(np.abs(spectral - singular.real)) / np.max(np.abs(singular))))
    return {"rel_difference": worst, "passed": worst < tol["rel_difference"]}


def _free_kernel_oracles(tol):
    dxs = np.linspace(-5.0, 5.0, 11)
    tau, d = 1.0, 0.5
    gauss = make_params(2.0, d_alpha=d)
    cauchy = make_params(1.0, d_alpha=d, validation_mode=True)
    err_g = max(abs(free_kernel(KernelQuery(x, 0.0, tau), gauss).real - _heat_kernel(x, tau, d, 1.0)) for x in dxs)
    err_c = max(abs(free_kernel(KernelQuery(x, 0.0, tau), cauchy).real - _cauchy_density(x, tau, d, 1.0)) for x in dxs)
    err_f = 0.0
    for x in (0.0, 0.5, 1.0, 2.0):
        k = free_kernel_extrapolated(KernelQuery(x, 0.0, 1.0, TimeType.REAL), gauss).value
        exact = _fresnel_kernel(x, 1.0, d, 1.0)
        err_f = max(err_f, abs(k - exact) / abs(exact))
    passed = err_g < tol["gaussian_abs"] and err_c < tol["cauchy_abs"] and err_f < tol["fresnel_rel"]
    return {"gaussian_abs": float(err_g), "cauchy_abs": float(err_c), "fresnel_rel": float(err_f), "passed": passed}


def _poisson_equivalence(tol):
    x = np.linspace(-1.0, 1.0, 23)[1:-1]
    xb, xa = np.meshgrid(x, x, indexing="ij")
    worst = 0.0
    start = time.perf_counter()
    for alpha in (1.5, 2.0):
        params = make_params(alpha)
        for tau in (0.1, 1.0):
            images = well_kernel_images(xb, xa, tau, 50, params)
            spectral = well_kernel_spectral(xb, xa, tau, 200, params)
            worst = max(worst, float(np.max(np.abs(images - spectral))))
    seconds = time.perf_counter() - start
    passed = worst < tol["max_abs"] and seconds < tol["seconds"]
    return {"max_abs": worst, "seconds": seconds, "passed": passed}


def _spectrum(tol):
    worst_ratio = 0.0
    n = np.arange(1, 21)
    for alpha in (1.2, 1.5, 1.8, 2.0):
        e = energy(n, make_params(alpha, d_alpha=0.7, hbar=1.3, l=0.8))
        worst_ratio = max(worst_ratio, float(np.max(np.abs(e / e[0] - n**alpha) / n**alpha)))
    m, hbar, l = 0.75, 1.1, 1.7
    e = energy(n, make_params(2.0, d_alpha=1.0 / (2.0 * m), hbar=hbar, l=l))
    textbook = n**2 * math.pi**2 * hbar**2 / (8.0 * m * l**2)
    worst_classical = float(np.max(np.abs(e - textbook) / textbook))
    passed = worst_ratio < tol["ratio_rel"] and worst_classical < tol["classical_rel"]
    return {"ratio_rel": worst_ratio, "classical_rel": worst_classical, "passed": passed}


def _parity_forms(tol):
    rng = np.random.default_rng(SEED)
    params = make_params(1.5, l=1.3)
    x = rng.uniform(-params.l, params.l, 1000)
    form_err = parity_err = 0.0
    for n in range(1, 13):
        state = eigenstate(n, params)
        form_err = max(form_err, float(np.max(np.abs(parity_form(n, params)(x) - state(x)))))
        parity_err = max(parity_err, float(np.max(np.abs(state(-x) - (-1) ** (n + 1) * state(x)))))
    passed = form_err < tol["form_abs"] and parity_err < tol["parity_abs"]
    return {"form_abs": form_err, "parity_abs": parity_err, "passed": passed}


def _orthonormality(tol):
    params = make_params(1.5)
    gram = gram_matrix(20, Grid.well(params.l, 2048), params)
    err = float(np.max(np.abs(gram - np.eye(20))))
    return {"max_abs": err, "passed": err < tol["max_abs"]}


def _evolution(tol):
    rng = np.random.default_rng(SEED)
    params = make_params(1.5)
    grid = Grid.well(params.l, 1024)
    coeffs = rng.normal(size=30) + 1j * rng.normal(size=30)
    c = SpectralCoefficients(coeffs / np.linalg.norm(coeffs), params)
    norm0 = reconstruct(c, grid).norm()
    drift = 0.0
    for _ in range(100):
        c = evolve_spectral(c, 0.05)
        drift = max(drift, abs(reconstruct(c, grid).norm() - norm0) / norm0)

    psi = gaussian_packet(grid, params, center=-0.2, width=0.15, momentum=8.0)
    by_modes = reconstruct(evolve_spectral(expand(psi, 200, params), 0.1), grid).values
    matrix = propagator_matrix(grid, 0.1, params, "spectral", TimeType.REAL, modes=200)
    by_kernel = evolve_by_kernel(psi, 0.1, matrix).values
    diff = float(np.max(np.abs(by_kernel - by_modes)))
    passed = drift < tol["norm_drift"] and diff < tol["kernel_vs_spectral"]
    return {"norm_drift": drift, "kernel_vs_spectral": diff, "passed": passed}


def _residual(tol):
    classical = make_params(2.0)
    spectral = [fse_residual(1, classical, n).l2_rel for n in (2048, 4096, 8192)]
    fd = [fse_residual(1, classical, n, method=RieszMethod.singular()).l2_rel for n in (1024, 2048, 4096)]
    order = math.log2(fd[1] / fd[2])
    nonlocal_params = make_params(1.5)
    base = fse_residual(1, nonlocal_params, 4096, 4.0)
    padded = fse_residual(1, nonlocal_params, 8192, 8.0)
    change = abs(padded.l2_rel - base.l2_rel) / base.l2_rel
    lo, hi = tol["order_min"], tol["order_max"]
    passed = (
        spectral[1] < tol["l2_rel_classical"]
        and fd[1] < tol["l2_rel_classical"]
        and spectral[0] > spectral[1] > spectral[2]
        and fd[0] > fd[1] > fd[2]
        and lo <= order <= hi
        and base.l2_rel > 0
        and change < tol["padding_change"]
    )
    return {
        "l2_rel_classical": spectral[1],
        "l2_rel_classical_fd": fd[1],
        "order": order,
        "l2_rel_alpha_1.5": base.l2_rel,
        "padding_change": change,
        "passed": passed,
    }


def _cli_determinism(tol):
    from . import cli

    runs = [
        ["spectrum", "--alpha", "2", "--d", "0.5", "--n-max", "5"],
        ["eigenfunction", "--n", "3", "--points", "65"],
        ["kernel", "--mode", "well-spectral", "--t", "0.3", "--xa", "0.1", "--grid", "9"],
        ["kernel", "--mode", "well-images", "--t", "0.5", "--xa", "0.2", "--grid", "9", "--verify"],
        ["evolve", "--init", "builtin:uniform", "--t", "0.5", "--steps", "5", "--points", "257"],
        ["residual", "--alpha", "2", "1.5", "--n", "1", "2", "--points", "1024"],
    ]
    mismatched = invalid = 0
    diff_worst = 0.0
    for argv in runs:
        first = cli.run_captured(argv)
        if first[0] != 0 or cli.run_captured(argv) != first:
            mismatched += 1
            continue
        text = first[1] if argv[0] != "eigenfunction" else cli.run_captured(argv + ["--format", "json"])[1]
        doc = cli.json_document(text)
        if cli.schema_errors(doc):
            invalid += 1
        if "--verify" in argv:
            diff_worst = max(diff_worst, max(r["diff"] for r in doc["records"]))
    passed = mismatched == 0 and invalid == 0 and diff_worst < tol["verify_diff"]
    return {"mismatched_runs": mismatched, "invalid_documents": invalid, "verify_diff": diff_worst, "passed": passed}


CHECKS = (
    Check("riesz_plane_wave", 1, "spectral Riesz operator on lattice plane waves", {"rel_error": 1e-10}, _riesz_plane_wave),
    Check("hermiticity", 2, "V = 0 Hamiltonian on a 512-point ring is Hermitian", {"max_asymmetry": 1e-10}, _hermiticity),
    Check("riesz_cross_method", 3, "spectral vs singular integral on a smooth bump", {"rel_difference": 1e-3}, _riesz_cross_method),
    Check(
        "free_kernel_oracles",
        4,
        "heat, Cauchy and Fresnel closed forms",
        {"gaussian_abs": 1e-6, "cauchy_abs": 1e-6, "fresnel_rel": 1e-4},
        _free_kernel_oracles,
    ),
    Check(
        "poisson_equivalence",
        5,
        "image sum (M = 50) vs mode sum (N = 200), imaginary time",
        {"max_abs": 1e-6, "seconds": 120.0},
        _poisson_equivalence,
    ),
    Check("spectrum", 6, "E_n / E_1 = n^alpha and the classical well spectrum", {"ratio_rel": 1e-12, "classical_rel": 1e-12}, _spectrum),
    Check("parity_forms", 7, "sine/cosine forms and x -> -x parity", {"form_abs": 1e-12, "parity_abs": 1e-12}, _parity_forms),
    Check("orthonormality", 8, "20 x 20 Gram matrix on a 2048-point grid", {"max_abs": 1e-8}, _orthonormality),
    Check(
        "evolution",
        9,
        "spectral norm conservation and kernel-matrix agreement",
        {"norm_drift": 1e-10, "kernel_vs_spectral": 1e-5},
        _evolution,
    ),
    Check(
        "residual",
        10,
        "classical-limit residual and padding stability at alpha = 1.5",
        {"l2_rel_classical": 1e-3, "order_min": 1.5, "order_max": 2.5, "padding_change": 0.1},
        _residual,
        slow=True,
    ),
    Check("cli_determinism", 11, "byte-identical CLI output and schema-valid JSON", {"verify_diff": 1e-6}, _cli_determinism),
)


def check_names() -> list:
    return [c.name for c in CHECKS]


def parse_overrides(items) -> dict:
    """Parse ``CHECK=TOL`` or ``CHECK.KEY=TOL`` strings."""
    out = {}
    known = {c.name: c for c in CHECKS}
    for item in items or ():
        key, sep, value = item.partition("=")
        name, _, sub = key.partition(".")
        if not sep or name not in known or (sub and sub not in known[name].tolerances):
            raise ValueError(f"bad tolerance override {item!r}; expected CHECK=TOL or CHECK.KEY=TOL")
        out[key] = float(value)
    return out


def _tolerances(check: Check, overrides: Mapping[str, float]) -> dict:
    tol = dict(check.tolerances)
    if check.name in overrides:
        tol = {k: overrides[check.name] for k in tol}
    for key in tol:
        if f"{check.name}.{key}" in overrides:
            tol[key] = overrides[f"{check.name}.{key}"]
    return tol


def run_check(check: Check, overrides: Optional[Mapping[str, float]] = None) -> CheckResult:
    tol = _tolerances(check, overrides or {})
    start = time.perf_counter()
    measured = check.run(tol)
    passed = bool(measured.pop("passed"))
    return CheckResult(check.name, check.criterion, check.summary, passed, measured, tol, time.perf_counter() - start)


def run_checks(names=None, overrides=None) -> list:
    selected = [c for c in CHECKS if names is None or c.name in names]
    return [run_check(c, overrides) for c in selected]
