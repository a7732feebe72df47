"""Time the compiled Airy kernel against the numpy fallback.

    python3 benchmarks/bench_kernels.py [--repeat 5]
"""
import argparse
import timeit

import numpy as np

from kdvgraph import _core_py

try:
    from kdvgraph import _core
except ImportError:  # extension not built
    _core = None


def cases():
    rng = np.random.default_rng(0)
    x_small = rng.uniform(-20, 20, 1_000)
    x_large = rng.uniform(-20, 20, 100_000)
    yield "airy_ai n=1e3", lambda mod: mod.airy_ai(x_small)
    yield "airy_ai n=1e5", lambda mod: mod.airy_ai(x_large)
    x_series = rng.uniform(-7, 5, 100_000)
    yield "airy_ai series zone n=1e5", lambda mod: mod.airy_ai(x_series)


def best(fn, repeat):
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    print(f"{'case':<26}{'compiled [ms]':>15}{'python [ms]':>14}{'speedup':>10}")
    for name, call in cases():
        t_py = best(lambda: call(_core_py), args.repeat)
        if _core is None:
            print(f"{name:<26}{'n/a':>15}{1e3 * t_py:>14.3f}{'':>10}")
            continue
        ref = call(_core_py)
        got = call(_core)
        diff = max(np.max(np.abs(np.asarray(a) - np.asarray(b))) for a, b in zip(np.atleast_2d(ref), np.atleast_2d(got)))
        t_c = best(lambda: call(_core), args.repeat)
        print(f"{name:<26}{1e3 * t_c:>15.3f}{1e3 * t_py:>14.3f}{t_py / t_c:>9.1f}x   max diff {diff:.1e}")


if __name__ == "__main__":
    main()
