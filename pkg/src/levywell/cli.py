"""Command-line interface: ``levywell <command> [options]``.

Every command writes one document, JSON or CSV, that embeds the full run
configuration. Floats are written with 17 significant digits so that values
round-trip exactly and identical configurations give identical bytes.

Exit codes: 0 success, 1 failed verification, 2 invalid arguments or
configuration, 3 numerical non-convergence.
"""

from __future__ import annotations

import argparse
import contextlib
import csv
import io
import json
import math
import os
import sys
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Optional

import numpy as np

from . import verify as verify_mod
from .core import DomainError, Grid, NumericalFailure, ShapeError, UsageError, WaveFunction, make_params
from .evolution import (
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
from .freekernel import KernelQuery, TimeType, free_kernel, free_kernel_extrapolated
from .residual import residual_sweep
from .riesz import RieszMethod
from .well import (
    DEFAULT_IMAGES,
    DEFAULT_MODES,
    PAIRS,
    SYMMETRIC,
    eigenfunction_values,
    eigenstate,
    propagator_matrix,
    well_kernel_images,
    well_kernel_spectral,
)

OUTPUT_DIR_ENV = "LEVYWELL_OUTPUT_DIR"
SCHEMA_VERSION = 1

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_USAGE = 2
EXIT_NUMERICAL = 3


# serialisation


def format_float(x: float) -> Optional[str]:
    x = float(x)
    if not math.isfinite(x):
        return None
    return "%.17g" % x


def _plain(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    return obj


def dumps(obj, indent: int = 0) -> str:
    """JSON text with every float written as %.17g; non-finite floats become null."""
    obj = _plain(obj)
    pad = "  " * (indent + 1)
    end = "  " * indent
    if obj is None:
        return "null"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        text = format_float(obj)
        return "null" if text is None else text
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {dumps(v, indent + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(not isinstance(_plain(v), (dict, list, tuple)) for v in obj):
            return "[" + ", ".join(dumps(v) for v in obj) + "]"
        return "[\n" + ",\n".join(pad + dumps(v, indent + 1) for v in obj) + "\n" + end + "]"
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def _cell(value) -> str:
    value = _plain(value)
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return format_float(value) or "nan"
    if value is None:
        return ""
    if isinstance(value, (dict, list, tuple)):
        return dumps(value).replace("\n", "").replace("  ", " ")
    return str(value)


@dataclass(frozen=True)
class RunConfig:
    """Command plus every option that shaped the output."""

    command: str
    options: dict

    def as_dict(self) -> dict:
        return {"command": self.command, **{k: self.options[k] for k in sorted(self.options)}}


def make_document(config: RunConfig, records: list, metadata: Optional[dict] = None) -> dict:
    return {
        "schema": f"levywell.{config.command}/{SCHEMA_VERSION}",
        "config": config.as_dict(),
        "metadata": metadata or {},
        "records": records,
    }


def render(document: dict, fmt: str) -> str:
    if fmt == "json":
        return dumps(document) + "\n"
    out = io.StringIO()
    out.write(f"# schema: {document['schema']}\n")
    out.write(f"# config: {_cell(document['config'])}\n")
    for key, value in document["metadata"].items():
        out.write(f"# {key}: {_cell(value)}\n")
    records = document["records"]
    columns = list(records[0]) if records else []
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(columns)
    for row in records:
        writer.writerow([_cell(row[c]) for c in columns])
    return out.getvalue()


def json_document(text: str) -> dict:
    return json.loads(text)


def load_schema(command: str) -> dict:
    path = resources.files("levywell") / "schemas" / f"{command}.schema.json"
    return json.loads(path.read_text())


def schema_errors(document: dict) -> list:
    """Messages for every schema violation of a JSON output document."""
    import jsonschema

    command = document.get("config", {}).get("command")
    try:
        schema = load_schema(command)
    except (FileNotFoundError, TypeError):
        return [f"no schema for command {command!r}"]
    validator = jsonschema.Draft202012Validator(schema)
    return [e.message for e in validator.iter_errors(document)]


# commands


def _params(args, alpha=None):
    return make_params(args.alpha if alpha is None else alpha, args.d, args.hbar, args.l)


def cmd_spectrum(args):
    params = _params(args)
    if args.n_max < 1:
        raise UsageError(f"--n-max must be >= 1, got {args.n_max}")
    records = []
    for n in range(1, args.n_max + 1):
        s = eigenstate(n, params)
        records.append({"n": n, "k_n": s.k_n, "E_n": s.energy, "parity": s.parity.value})
    return records, {}


def cmd_eigenfunction(args):
    params = _params(args)
    state = eigenstate(args.n, params)
    grid = Grid.well(params.l, args.points)
    wf = eigenfunction_values(state, grid)
    # the modes are real
    records = [{"x": x, "value": v.real} for x, v in zip(grid.points, wf.values)]
    meta = {"n": state.n, "parity": state.parity.value, "k_n": state.k_n, "E_n": state.energy}
    return records, meta


def _kernel_points(args, params):
    if args.grid is not None:
        if args.grid < 2:
            raise UsageError(f"--grid needs at least 2 points, got {args.grid}")
        return np.linspace(-params.l, params.l, args.grid)
    return np.array([args.xb])


def cmd_kernel(args):
    params = _params(args)
    time_type = TimeType(args.time)
    xb = _kernel_points(args, params)
    xa = args.xa
    meta = {"mode": args.mode, "time": time_type.value}
    diff = None
    if args.mode == "free":
        if args.verify:
            raise UsageError("--verify compares the two well routes; use --mode well-images or well-spectral")
        values, errors = [], []
        for x in xb:
            q = KernelQuery(float(x), xa, args.t, time_type)
            if time_type is TimeType.REAL:
                ext = free_kernel_extrapolated(q, params)
                values.append(ext.value)
                errors.append(ext.error)
            else:
                values.append(free_kernel(q, params))
        values = np.array(values, dtype=complex)
    else:
        images = lambda: well_kernel_images(xb, xa, args.t, args.images, params, time_type, args.truncation)
        modes = lambda: well_kernel_spectral(xb, xa, args.t, args.modes, params, time_type)
        values = np.asarray(images() if args.mode == "well-images" else modes(), dtype=complex)
        if args.verify:
            other = np.asarray(modes() if args.mode == "well-images" else images(), dtype=complex)
            diff = np.abs(values - other)
        meta.update(images=args.images, modes=args.modes, truncation=args.truncation)
    records = []
    for i, x in enumerate(xb):
        row = {"x_b": float(x), "x_a": float(xa), "t": args.t, "re": values[i].real, "im": values[i].imag}
        if args.mode == "free" and time_type is TimeType.REAL:
            row["error"] = errors[i]
        if diff is not None:
            row["diff"] = diff[i]
        records.append(row)
    return records, meta


def _read_state_csv(path: str, params) -> WaveFunction:
    try:
        data = np.loadtxt(path, delimiter=",", comments="#", ndmin=2, dtype=str)
    except OSError as exc:
        raise UsageError(f"cannot read initial state: {exc}") from exc
    if data.shape[0] and not _is_number(data[0, 0]):
        data = data[1:]
    if data.shape[1] != 3:
        raise UsageError("initial-state CSV needs columns x, re, im")
    x, re, im = data.astype(float).T
    grid = Grid.well(params.l, x.size)
    if not np.allclose(x, grid.points, rtol=0.0, atol=1e-9 * params.l):
        raise UsageError("initial-state x column must be a uniform grid spanning [-l, l]")
    return WaveFunction(grid, re + 1j * im)


def _is_number(text: str) -> bool:
    try:
        float(text)
    except ValueError:
        return False
    return True


def _initial_state(args, params, grid) -> WaveFunction:
    spec = args.init
    if spec == "builtin:uniform":
        return uniform_state(grid, params)
    if spec == "builtin:gaussian":
        return gaussian_packet(grid, params, center=-0.3 * params.l, width=0.15 * params.l, momentum=10.0)
    if spec.startswith("builtin:eigen:"):
        n = int(spec.rsplit(":", 1)[1])
        return eigenfunction_values(eigenstate(n, params), grid)
    if spec == "builtin:random":
        rng = np.random.default_rng(args.seed)
        c = rng.normal(size=10) + 1j * rng.normal(size=10)
        phi = np.array([eigenstate(n, params)(grid.points) for n in range(1, 11)])
        return WaveFunction(grid, (c / np.linalg.norm(c)) @ phi)
    if spec.startswith("builtin:"):
        raise UsageError(f"unknown builtin state {spec!r}; use uniform, gaussian, random or eigen:N")
    return _read_state_csv(spec, params)


def _total_time(args, params) -> float:
    if args.t == "revival":
        return revival_time(params)
    try:
        return float(args.t)
    except ValueError:
        raise UsageError(f"--t must be a number or 'revival', got {args.t!r}") from None


def cmd_evolve(args):
    params = _params(args)
    if args.steps < 1:
        raise UsageError(f"--steps must be >= 1, got {args.steps}")
    if args.init.startswith("builtin:"):
        grid = Grid.well(params.l, args.points)
        psi0 = _initial_state(args, params, grid)
    else:
        psi0 = _initial_state(args, params, None)
        grid = psi0.grid
    input_norm = psi0.norm()
    if input_norm == 0:
        raise UsageError("initial state is identically zero")
    psi0 = psi0.scaled(1.0 / input_norm)
    total = _total_time(args, params)
    dt = total / args.steps

    c = expand(psi0, args.modes, params)
    matrix = propagator_matrix(grid, dt, params, "spectral", TimeType.REAL, modes=args.modes) if args.method == "kernel" else None
    ref = reconstruct(c, grid) if args.method == "spectral" else psi0
    psi = ref
    records = []
    fields = []
    for step in range(args.steps + 1):
        if step > 0:
            if matrix is None:
                c = evolve_spectral(c, dt)
                psi = reconstruct(c, grid)
            else:
                psi = evolve_by_kernel(psi, dt, matrix)
                c = expand(psi, args.modes, params)
        records.append(
            {
                "step": step,
                "t": step * dt,
                "norm": psi.norm(),
                "energy": energy_expectation(c),
                "fidelity": fidelity(ref, psi),
                "truncated_mass": truncated_mass(c),
            }
        )
        if args.dump:
            fields.append((step, psi))
    meta = {"dt": dt, "n_points": grid.n_points, "input_norm": input_norm, "method": args.method}
    return records, meta, fields


def cmd_residual(args):
    method = RieszMethod.singular() if args.method == "singular" else RieszMethod.spectral()
    base = make_params(1.5, args.d, args.hbar, args.l)
    rows = residual_sweep(
        args.n,
        args.alpha,
        base,
        n_points=args.points,
        padding_factor=args.padding,
        interior_margin=args.margin,
        method=method,
        check_convergence=args.check_convergence,
    )
    meta = {
        "label": "diagnostic",
        "note": "residual of the zero-extended eigenfunctions under the full-line operator; "
        "reported without a ground-truth claim",
    }
    return rows, meta


def cmd_verify(args, stdout):
    if args.list:
        for c in verify_mod.CHECKS:
            tol = ", ".join(f"{k}={v:g}" for k, v in c.tolerances.items())
            stdout.write(f"[{c.criterion:2d}] {c.name:<22s} {c.summary} ({tol})\n")
        return EXIT_OK
    overrides = verify_mod.parse_overrides(args.inject)
    names = args.only or None
    if names:
        unknown = sorted(set(names) - set(verify_mod.check_names()))
        if unknown:
            raise UsageError(f"unknown check(s): {', '.join(unknown)}")
    results = verify_mod.run_checks(names, overrides)
    lines = [r.line() for r in results]
    passed = sum(r.passed for r in results)
    lines.append(f"{passed}/{len(results)} checks passed")
    stdout.write("\n".join(lines) + "\n")
    return EXIT_OK if passed == len(results) else EXIT_FAILED


# argument parsing


def _add_physics(p: argparse.ArgumentParser, alpha_many: bool = False):
    if alpha_many:
        p.add_argument("--alpha", type=float, nargs="+", default=[1.5], help="Levy indices (1, 2]")
    else:
        p.add_argument("--alpha", type=float, default=1.5, help="Levy index in (1, 2]")
    p.add_argument("--d", type=float, default=1.0, help="fractional diffusion coefficient D_alpha")
    p.add_argument("--hbar", type=float, default=1.0)
    p.add_argument("--l", type=float, default=1.0, help="well half-width")


def _add_output(p: argparse.ArgumentParser, default_format: str):
    p.add_argument("--format", choices=("json", "csv"), default=default_format)
    p.add_argument("--out", default=None, help=f"output file, '-' for stdout (default: ${OUTPUT_DIR_ENV}/<command>.<ext> or stdout)")
    p.add_argument("--seed", type=int, default=0, help="seed for random initial states")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="levywell", description="Fractional quantum mechanics in an infinite well.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("spectrum", help="energy levels E_n = D (n pi hbar / 2l)^alpha")
    _add_physics(p)
    p.add_argument("--n-max", type=int, default=10)
    _add_output(p, "json")

    p = sub.add_parser("eigenfunction", help="samples of phi_n on [-l, l]")
    _add_physics(p)
    p.add_argument("--n", type=int, default=1)
    p.add_argument("--points", type=int, default=201)
    _add_output(p, "csv")

    p = sub.add_parser("kernel", help="free or in-well propagator")
    _add_physics(p)
    p.add_argument("--mode", choices=("free", "well-images", "well-spectral"), default="well-spectral")
    p.add_argument("--time", choices=("real", "imaginary"), default="imaginary")
    p.add_argument("--t", type=float, default=1.0, help="elapsed (imaginary) time")
    p.add_argument("--xa", type=float, default=0.0)
    group = p.add_mutually_exclusive_group()
    group.add_argument("--xb", type=float, default=0.0)
    group.add_argument("--grid", type=int, default=None, help="evaluate at this many x_b nodes spanning [-l, l]")
    p.add_argument("--images", type=int, default=DEFAULT_IMAGES)
    p.add_argument("--modes", type=int, default=DEFAULT_MODES)
    p.add_argument("--truncation", choices=(PAIRS, SYMMETRIC), default=PAIRS)
    p.add_argument("--verify", action="store_true", help="add |images - spectral| as a diff column")
    _add_output(p, "json")

    p = sub.add_parser("evolve", help="time series of norm, energy and fidelity")
    _add_physics(p)
    p.add_argument("--init", default="builtin:uniform", help="builtin:uniform|gaussian|random|eigen:N or a CSV file (x, re, im)")
    p.add_argument("--t", default="1.0", help="total time, or 'revival' (alpha = 2)")
    p.add_argument("--steps", type=int, default=10)
    p.add_argument("--modes", type=int, default=DEFAULT_MODES)
    p.add_argument("--points", type=int, default=1025)
    p.add_argument("--method", choices=("spectral", "kernel"), default="spectral")
    p.add_argument("--dump", default=None, help="directory for per-step field CSVs")
    _add_output(p, "json")

    p = sub.add_parser("residual", help="nonlocality residual of the well eigenfunctions (diagnostic)")
    _add_physics(p, alpha_many=True)
    p.add_argument("--n", type=int, nargs="*", default=[1])
    p.add_argument("--method", choices=("spectral", "singular"), default="spectral")
    p.add_argument("--padding", type=float, default=4.0)
    p.add_argument("--margin", type=float, default=0.05)
    p.add_argument("--points", type=int, default=4096)
    p.add_argument("--check-convergence", action="store_true")
    _add_output(p, "json")

    p = sub.add_parser("verify", help="run the invariant suite")
    p.add_argument("--list", action="store_true", help="list checks without running them")
    p.add_argument("--only", action="append", default=None, metavar="CHECK")
    p.add_argument("--inject", action="append", default=None, metavar="CHECK[.KEY]=TOL", help="override a tolerance")
    return parser


COMMANDS = {
    "spectrum": cmd_spectrum,
    "eigenfunction": cmd_eigenfunction,
    "kernel": cmd_kernel,
    "residual": cmd_residual,
}


def _output_path(args) -> Optional[Path]:
    if args.out == "-":
        return None
    if args.out:
        return Path(args.out)
    env = os.environ.get(OUTPUT_DIR_ENV)
    if env:
        return Path(env) / f"{args.command}.{args.format}"
    return None


def _config(args, path: Optional[Path]) -> RunConfig:
    skip = {"command", "out"}
    options = {k: v for k, v in vars(args).items() if k not in skip}
    options["output"] = "-" if path is None else str(path)
    return RunConfig(args.command, options)


def _execute(args, stdout) -> int:
    if args.command == "verify":
        return cmd_verify(args, stdout)
    path = _output_path(args)
    config = _config(args, path)
    fields = []
    if args.command == "evolve":
        records, meta, fields = cmd_evolve(args)
    else:
        records, meta = COMMANDS[args.command](args)
    text = render(make_document(config, records, meta), args.format)
    # all computation is done: nothing is written before this point
    if fields:
        dump_dir = Path(args.dump)
        dump_dir.mkdir(parents=True, exist_ok=True)
        for step, psi in fields:
            rows = [{"x": x, "re": v.real, "im": v.imag} for x, v in zip(psi.x, psi.values)]
            doc = make_document(config, rows, {"step": step})
            (dump_dir / f"evolve_step_{step:05d}.csv").write_text(render(doc, "csv"))
    if path is None:
        stdout.write(text)
    else:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)
    return EXIT_OK


def main(argv=None, stdout=None) -> int:
    stdout = stdout or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return _execute(args, stdout)
    except NumericalFailure as exc:
        print(f"levywell: numerical failure: {exc} (estimate {exc.estimate:.3g})", file=sys.stderr)
        return EXIT_NUMERICAL
    except (DomainError, UsageError, ShapeError, ValueError) as exc:
        print(f"levywell: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def run_captured(argv) -> tuple:
    """Run a command in-process with output forced to a string; returns (exit code, text)."""
    argv = list(argv)
    if argv and argv[0] != "verify" and "--out" not in argv:
        argv += ["--out", "-"]
    out, err = io.StringIO(), io.StringIO()
    with contextlib.redirect_stderr(err):
        code = main(argv, stdout=out)
    return code, out.getvalue()


if __name__ == "__main__":
    sys.exit(main())
