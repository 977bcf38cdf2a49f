import os
import random
import subprocess
import sys

import numpy as np
import pytest

from narrative import kernel
from narrative.mapping import LINEAR

from corpus import random_affine_system, random_mixed_system

PY = kernel.load_backend("python")
try:
    CY = kernel.load_backend("cython")
except ImportError:  # pragma: no cover - extension not built
    CY = None

needs_ext = pytest.mark.skipif(CY is None, reason="compiled kernel not built")


def arrays(sys_):
    c = sys_.compiled
    return c.kind, c.param, c.ptr, c.idx, c.weight


def systems(n, seed):
    rng = random.Random(seed)
    for k in range(n):
        s = random_mixed_system(rng) if k % 2 else random_affine_system(rng)
        yield rng, s


def test_default_backend_is_compiled_when_available():
    assert kernel.BACKEND == ("cython" if CY is not None else "python")


def test_environment_forces_fallback():
    env = dict(os.environ, NARRATIVE_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", "import narrative.kernel as k; print(k.BACKEND)"],
                         capture_output=True, text=True, env=env, check=True)
    assert out.stdout.strip() == "python"


@needs_ext
def test_step_agrees():
    for rng, s in systems(300, 1):
        x = np.array([rng.uniform(0.1, 10) for _ in range(s.p)])
        a, b = np.empty(s.p), np.empty(s.p)
        PY.step(*arrays(s), x, a)
        CY.step(*arrays(s), x, b)
        np.testing.assert_allclose(a, b, rtol=1e-15, atol=0)


@needs_ext
def test_run_agrees():
    for rng, s in systems(200, 2):
        x = np.array([rng.uniform(0.1, 10) for _ in range(s.p)])
        sa, na, xa = PY.run(*arrays(s), x, 1e-12, 5000)
        sb, nb, xb = CY.run(*arrays(s), x, 1e-12, 5000)
        assert sa == sb
        assert abs(na - nb) <= 2
        np.testing.assert_allclose(xa, xb, rtol=1e-10, atol=1e-12)


@needs_ext
def test_batch_agrees_with_single():
    rng, s = next(systems(2, 3))
    starts = np.array([[rng.uniform(0.1, 10) for _ in range(s.p)] for _ in range(10)])
    tols = np.full(10, 1e-12)
    for be in (PY, CY):
        status, steps, final = be.run_batch(*arrays(s), starts.copy(), tols, 5000)
        for r in range(10):
            one = be.run(*arrays(s), starts[r], 1e-12, 5000)
            assert status[r] == one[0] and steps[r] == one[1]
            assert np.array_equal(final[r], one[2])


@pytest.mark.parametrize("be", [PY, CY] if CY is not None else [PY], ids=lambda b: b.BACKEND)
def test_statuses(be):
    kind = np.array([LINEAR, LINEAR], dtype=np.int64)
    param = np.ones(2)
    ptr = np.array([0, 1, 2], dtype=np.int64)
    swap = np.array([1, 0], dtype=np.int64)
    ident = np.array([0, 1], dtype=np.int64)
    w = np.ones(2)
    x = np.array([0.0, 1.0])
    assert be.run(kind, param, ptr, swap, w, x, 1e-12, 50)[0] == kernel.BUDGET
    assert be.run(kind, param, ptr, ident, w, x, 1e-12, 50)[0] == kernel.STATIONARY
    assert be.run(kind, param, ptr, ident, w, np.array([2.0, 2.0]), 1e-12, 50)[:2] == (kernel.CONVERGED, 0)

