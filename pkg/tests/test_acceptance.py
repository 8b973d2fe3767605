"""Acceptance criteria, one test per criterion.

Each test runs the matching check from ``levywell.verify`` and prints a single
PASS/FAIL line. The tolerances are pinned below so that the registry cannot
drift looser than the stated acceptance thresholds.
"""

import shutil
import subprocess
import sys

import pytest

from levywell.verify import CHECKS, run_check

STATED = {
    1: {"rel_error": 1e-10},
    2: {"max_asymmetry": 1e-10},
    3: {"rel_difference": 1e-3},
    4: {"gaussian_abs": 1e-6, "cauchy_abs": 1e-6, "fresnel_rel": 1e-4},
    5: {"max_abs": 1e-6, "seconds": 120.0},
    6: {"ratio_rel": 1e-12, "classical_rel": 1e-12},
    7: {"form_abs": 1e-12, "parity_abs": 1e-12},
    8: {"max_abs": 1e-8},
    9: {"norm_drift": 1e-10, "kernel_vs_spectral": 1e-5},
    10: {"l2_rel_classical": 1e-3, "order_min": 1.5, "order_max": 2.5, "padding_change": 0.1},
    11: {"verify_diff": 1e-6},
}


def _report(capsys, line):
    with capsys.disabled():
        print("\n" + line)


@pytest.mark.parametrize("check", CHECKS, ids=[f"c{c.criterion:02d}_{c.name}" for c in CHECKS])
def test_criterion(check, capsys):
    assert dict(check.tolerances) == STATED[check.criterion]
    result = run_check(check)
    _report(capsys, result.line())
    assert result.passed, result.line()


def test_all_criteria_covered():
    assert sorted(c.criterion for c in CHECKS) == list(range(1, 12))


def test_c11_verify_command_exits_zero(capsys):
    exe = shutil.which("levywell")
    argv = [exe] if exe else [sys.executable, "-m", "levywell"]
    proc = subprocess.run(argv + ["verify"], capture_output=True, text=True, timeout=600)
    status = "PASS" if proc.returncode == 0 else "FAIL"
    _report(capsys, f"{status:5s} [11] levywell verify        exit_code={proc.returncode}")
    assert proc.returncode == 0, proc.stdout + proc.stderr
    assert "11/11 checks passed" in proc.stdout
