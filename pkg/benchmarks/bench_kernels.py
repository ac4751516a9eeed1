"""Time the compiled phase/Duhamel kernels against the numpy fallback.

    python benchmarks/bench_kernels.py [--size 200000] [--repeat 5]

Reports the best wall time per call and checks that both backends agree.
"""

import argparse
import timeit

import numpy as np

from fracwave.spectral_core import _fallback

try:
    from fracwave.spectral_core import _kernels
except ImportError:
    _kernels = None


def _inputs(size, seed=0):
    rng = np.random.default_rng(seed)
    s = rng.uniform(0.0, 2.0, size)
    xi = rng.uniform(-40.0, 40.0, size)
    a = rng.uniform(0.0, 30.0, size)
    xi[: size // 10] = a[: size // 10]   # resonant slice exercises the series branch
    z = rng.uniform(-1e-3, 1e-3, size)
    return s, xi, a, z


def _cases(size):
    s, xi, a, z = _inputs(size)
    u = np.linspace(0.0, 1.0, 48)
    grid = np.linspace(-60.0, 60.0, max(size // 48, 1))
    return {
        "phase_integral": lambda m: m.phase_integral(z, s),
        "duhamel_radial": lambda m: m.duhamel_radial(s, xi, a),
        "shifted_duhamel": lambda m: m.shifted_duhamel(s, xi, a),
        "shifted_duhamel_table": lambda m: m.shifted_duhamel_table(u, grid, 7.5),
    }


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    parser.add_argument("--size", type=int, default=200_000)
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args(argv)
    if _kernels is None:
        print("compiled extension not built; only the fallback can be timed")
    print(f"{'kernel':<24}{'fallback ms':>14}{'compiled ms':>14}{'speedup':>10}{'max diff':>12}")
    for name, call in _cases(args.size).items():
        slow = min(timeit.repeat(lambda: call(_fallback), number=1, repeat=args.repeat)) * 1e3
        if _kernels is None:
            print(f"{name:<24}{slow:>14.2f}{'-':>14}{'-':>10}{'-':>12}")
            continue
        fast = min(timeit.repeat(lambda: call(_kernels), number=1, repeat=args.repeat)) * 1e3
        diff = float(np.max(np.abs(call(_fallback) - call(_kernels))))
        print(f"{name:<24}{slow:>14.2f}{fast:>14.2f}{slow / fast:>9.1f}x{diff:>12.1e}")


if __name__ == "__main__":
    main()
