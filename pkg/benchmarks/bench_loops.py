#!/usr/bin/env python3
"""Benchmark the compiled trajectory kernels against the pure-Python loops.

Run after an editable install:  python benchmarks/bench_loops.py
"""

from __future__ import annotations

import math
import time

import numpy as np

from sl2ode._core import available_backends, get_backend


def time_call(fn, *args, repeat: int = 5):
    best = math.inf
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best, out


def main() -> int:
    backends = available_backends()
    print(f"backends available: {', '.join(backends)}")

    cases = []

    # second order: 10^5 steps on a gentle trajectory
    g = 1.0
    x0, h = 0.25, 5e-6
    y0 = 2.0 * math.sqrt(1.0 - x0)
    y1 = 2.0 * math.sqrt(1.0 - (x0 + h))
    I1 = (y1 - y0) / math.sqrt((x0 + h) * x0)
    beta = I1 * (g * I1 * I1 / 4.0 + 2.0)
    cases.append(("second_order 1e5 steps", "run_second_order",
                  (x0, y0, x0 + h, y1, beta, 100_000, math.inf, -math.inf, True)))

    # third order strict: Fig.2-like data
    from sl2ode import init_third_order
    st = init_third_order(1.0, 1.0, 10.0, -4.0, 1e-4, alpha=-1.0, mode="strict")
    cases.append(("third_order strict 2e4 steps", "run_third_strict_power",
                  (st.p0[0], st.p0[1], st.p1[0], st.p1[1], st.p2[0], st.p2[1],
                   st.I1, -1.0, 20_000, math.inf, -math.inf)))

    # schwarz: Moebius continuation, 10^5 steps
    f = lambda x: (2.0 * x + 1.0) / (0.3 * x + 2.0)
    hs = 1e-5
    Ks = np.full(100_000, 4.0)
    cases.append(("schwarz 1e5 steps", "run_schwarz",
                  (f(0.0), f(hs), f(2 * hs), Ks)))

    for label, fn_name, args in cases:
        row = [f"{label:32s}"]
        results = {}
        for b in backends:
            fn = getattr(get_backend(b), fn_name)
            dt, out = time_call(fn, *args)
            results[b] = (dt, out)
            row.append(f"{b}: {dt * 1e3:9.3f} ms")
        if len(backends) == 2:
            speedup = results["python"][0] / results["cython"][0]
            row.append(f"speedup x{speedup:.1f}")
            a = np.asarray(results["cython"][1][0])
            b_ = np.asarray(results["python"][1][0])
            same = np.array_equal(a, b_)
            row.append("bitwise-identical" if same else "MISMATCH")
        print("  ".join(row))
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
