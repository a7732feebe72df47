"""Select the compiled Airy kernel when built, else the numpy fallback.

Causal convolution always goes through np.convolve, which beat a compiled direct sum.

Set KDVGRAPH_PURE_PYTHON=1 to force the fallback.
"""
import os

BACKEND = "python"
if os.environ.get("KDVGRAPH_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from kdvgraph._core import airy_ai

        BACKEND = "compiled"
    except ImportError:
        pass
if BACKEND == "python":
    from kdvgraph._core_py import airy_ai

from kdvgraph._core_py import causal_convolve  # noqa: E402

__all__ = ["BACKEND", "airy_ai", "causal_convolve"]
