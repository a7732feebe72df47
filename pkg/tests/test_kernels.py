import os
import subprocess
import sys

import numpy as np

from kdvgraph import _core_py, _kernels


def _backend(env_value):
    env = {**os.environ, "KDVGRAPH_PURE_PYTHON": env_value}
    r = subprocess.run(
        [sys.executable, "-c", "from kdvgraph import _kernels; print(_kernels.BACKEND)"],
        capture_output=True, text=True, env=env, check=True,
    )
    return r.stdout.strip()


def test_env_forces_python_fallback():
    assert _backend("1") == "python"


def test_default_backend_prefers_extension():
    try:
        import kdvgraph._core  # noqa: F401
        want = "compiled"
    except ImportError:
        want = "python"
    assert _backend("") == want


def test_causal_convolve_matches_direct_sum():
    rng = np.random.default_rng(1)
    w, f = rng.normal(size=50), rng.normal(size=50) + 1j * rng.normal(size=50)
    direct = np.array([sum(w[j] * f[n - j] for j in range(n + 1)) for n in range(50)])
    assert np.allclose(_core_py.causal_convolve(w, f), direct)
    assert _kernels.causal_convolve is _core_py.causal_convolve
