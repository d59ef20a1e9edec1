"""Timing of the compiled kernels against the pure-Python fallback.

    python3 benchmarks/bench_kernels.py [--repeat 5]
"""

from __future__ import annotations

import argparse
import timeit

import numpy as np

from demsm import _kernels_py

try:
    from demsm import _kernels as _compiled
except ImportError:
    _compiled = None


def _cases(rng):
    y6 = np.sort(rng.normal(size=6))
    p6 = rng.dirichlet(np.ones(6))
    y_big = np.sort(rng.normal(size=5000))
    p_big = rng.dirichlet(np.ones(5000))
    return {
        "grid_scan n=1000, 6 atoms": lambda k: k.grid_scan(y6, p6, 0.5, 2.0, 0.5, 2.0, True, 1000),
        "greedy_box 5000 atoms": lambda k: k.greedy_box(y_big, p_big, 0.5, 2.0, True),
        "check_loss_at_quantile 5000 atoms": lambda k: k.check_loss_at_quantile(y_big, p_big, 2 / 3),
    }


def main(argv=None) -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    cases = _cases(np.random.default_rng(0))
    backends = [("python", _kernels_py)]
    if _compiled is not None:
        backends.insert(0, ("compiled", _compiled))
    else:
        print("compiled extension not built; timing the fallback only")
    print(f"{'kernel':<36}" + "".join(f"{name:>14}" for name, _ in backends) + f"{'speedup':>10}")
    for label, fn in cases.items():
        times = []
        for _, mod in backends:
            number = 3
            best = min(timeit.repeat(lambda: fn(mod), number=number, repeat=args.repeat)) / number
            times.append(best)
        speed = f"{times[-1] / times[0]:>9.1f}x" if len(times) == 2 else ""
        print(f"{label:<36}" + "".join(f"{t * 1e3:>11.3f} ms" for t in times) + speed)


if __name__ == "__main__":
    main()
