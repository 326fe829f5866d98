"""Time the compiled RK4 kernel against the numpy fallback.

    python3 benchmarks/bench_rk4.py [--repeat 5] [--oversample 10]

The workload is one equilibrium simulation on the 34-agent karate club
graph (t_f = 10, 201 output samples), the same call the deviation check
makes several hundred times.
"""
import argparse
import time

import numpy as np

from hkgame import _rk4_py, nash
from hkgame.dynamics import GameConfig, stage_times, two_cluster_opinions
from hkgame.graph import zachary_karate_club

try:
    from hkgame import _rk4
except ImportError:
    _rk4 = None


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--oversample", type=int, default=10)
    args = ap.parse_args()

    g = zachary_karate_club()
    cfg = GameConfig(g, 10.0, 1.0, 1.0, two_cluster_opinions(g.n, 0))
    U = np.ascontiguousarray(nash.solve(cfg).control.sample(stage_times(cfg, args.oversample)))
    steps = (cfg.samples - 1) * args.oversample
    call = (np.ascontiguousarray(cfg.dynamics), np.ascontiguousarray(cfg.b), U,
            np.ascontiguousarray(cfg.x0), cfg.t_f / steps, args.oversample)

    t_py, x_py = best_of(lambda: _rk4_py.rk4_linear(*call), args.repeat)
    print(f"steps {steps}, agents {g.n}")
    print(f"numpy  kernel: {1e3 * t_py:8.2f} ms")
    if _rk4 is None:
        print("compiled kernel not built; install with Cython available")
        return
    t_cy, x_cy = best_of(lambda: _rk4.rk4_linear(*call), args.repeat)
    print(f"cython kernel: {1e3 * t_cy:8.2f} ms  (speed-up {t_py / t_cy:.1f}x)")
    print(f"max |difference|: {np.max(np.abs(x_py - x_cy)):.1e}")


if __name__ == "__main__":
    main()
