"""Kernel backend selection and parity."""

import os
import subprocess
import sys

import numpy as np
import pytest

from solvforge import kernel_backend
from solvforge._rk4_py import rk4_propagate as rk4_py


def _sample_inputs(n=4001):
    rng = np.random.default_rng(1)
    q = rng.uniform(-2.0, 2.0, n)
    qd = rng.uniform(-1.0, 1.0, n)
    step = 1e-3
    qm = 0.5 * (q[:-1] + q[1:]) + (step / 8.0) * (qd[:-1] - qd[1:])
    return q, qm, step


def test_backend_reported():
    assert kernel_backend() in ("cython", "python")


def test_compiled_fallback_parity():
    cy = pytest.importorskip("solvforge._rk4_cy")
    q, qm, step = _sample_inputs()
    pc, dc = cy.rk4_propagate(q, qm, step, 0.0, 1.0)
    pp, dp = rk4_py(q, qm, step, 0.0, 1.0)
    assert np.array_equal(pc, pp)
    assert np.array_equal(dc, dp)


def test_pure_python_env_forces_fallback():
    code = (
        "import solvforge; print(solvforge.kernel_backend())"
    )
    env = dict(os.environ, FORGE_PURE_PYTHON="1")
    out = subprocess.run(
        [sys.executable, "-c", code], capture_output=True, text=True, env=env, check=True
    )
    assert out.stdout.strip() == "python"
