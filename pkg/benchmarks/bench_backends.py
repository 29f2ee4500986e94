"""Benchmark the numba kernels against the pure-numpy fallback.

Runs the three hot kernel families on realistic sizes under the current
backend (CXBODY_BACKEND), or both when invoked as a script: it re-execs
itself once with CXBODY_BACKEND=numpy and prints a comparison table.

    python3 benchmarks/bench_backends.py
"""

import json
import os
import subprocess
import sys
import time

import numpy as np


def _bench_once():
    from cxbody import backend
    from cxbody.kernels import chunked_sum, gram_phase_average, jquad_pairs
    from cxbody.spheregrid import phase_difference_grid, simplex_rule

    rng = np.random.default_rng(0)
    results = {}

    x = rng.normal(size=4_000_000)
    t0 = time.perf_counter()
    for _ in range(5):
        chunked_sum(x)
    results["chunked_sum 4M x5"] = time.perf_counter() - t0

    simp = simplex_rule(3, 24)
    cosines, wd = phase_difference_grid(3, 20)
    s = simp.nodes
    a = np.sqrt(s[:, None, :] * s[None, :, :])
    sumsq = np.sum(s[:, None, :] * s[None, :, :], axis=2)
    cross = np.stack([2 * a[:, :, 0] * a[:, :, 1],
                      2 * a[:, :, 0] * a[:, :, 2],
                      2 * a[:, :, 1] * a[:, :, 2]], axis=2)
    gram_phase_average(sumsq[:4, :4], cross[:4, :4], cosines, wd, 2, 1.0)  # warm up
    t0 = time.perf_counter()
    gram_phase_average(sumsq, cross, cosines, wd, 10, 1.0)
    results["zonal gram 576^2 x400 phases, 11 bands"] = time.perf_counter() - t0

    u = rng.normal(size=(64, 2)) + 1j * rng.normal(size=(64, 2))
    u /= np.linalg.norm(u, axis=1, keepdims=True)
    v = rng.normal(size=(50_000, 2)) + 1j * rng.normal(size=(50_000, 2))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    w = rng.uniform(0.5, 1.5, size=50_000)
    f = rng.normal(size=50_000)
    verts = np.exp(1j * np.pi * np.arange(4) / 2)
    jquad_pairs(u[:2], v[:100], w[:100], f[:100], -1.0)  # warm up
    t0 = time.perf_counter()
    jquad_pairs(u, v, w, f, -1.0)
    results["kernel quadrature disc 64x50k"] = time.perf_counter() - t0
    t0 = time.perf_counter()
    jquad_pairs(u, v, w, f, 1.0, verts)
    results["kernel quadrature square 64x50k"] = time.perf_counter() - t0

    return backend.backend_name(), results


def main():
    name, ours = _bench_once()
    if os.environ.get("_CXBODY_BENCH_CHILD"):
        print(json.dumps({"backend": name, "results": ours}))
        return
    env = dict(os.environ, CXBODY_BACKEND="numpy", _CXBODY_BENCH_CHILD="1")
    proc = subprocess.run([sys.executable, __file__], env=env,
                          capture_output=True, text=True)
    other = json.loads(proc.stdout.splitlines()[-1])
    print(f"{'kernel':<45} {name:>10} {other['backend']:>10} {'speedup':>8}")
    for key, t in ours.items():
        t2 = other["results"][key]
        print(f"{key:<45} {t:>9.3f}s {t2:>9.3f}s {t2 / t:>7.1f}x")


if __name__ == "__main__":
    main()
