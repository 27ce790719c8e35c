"""Benchmark: compiled propagation kernel vs the pure-numpy fallback.

Times the ordered-exponential product on representative workloads (the
two-level and two-qubit gate stacks that dominate the sweeps, plus a
lattice-sized block) and a full gate pipeline run through each backend.

Run:  python benchmarks/bench_propagation.py
"""
import importlib
import os
import sys
import time

import numpy as np


def _load_backends():
    backends = {}
    from qgate import _kernels_py
    backends["python"] = _kernels_py.propagate
    try:
        from qgate import _kernels
        backends["compiled"] = _kernels.propagate
    except ImportError:
        print("compiled kernel not built; benchmarking the fallback only")
    return backends


def _random_stack(rng, n, d):
    a = rng.normal(size=(n, d, d)) + 1j * rng.normal(size=(n, d, d))
    return 0.5 * (a + np.conj(np.swapaxes(a, 1, 2)))


def bench_kernels():
    rng = np.random.default_rng(0)
    backends = _load_backends()
    cases = [
        ("gate 2x2", 2, 200_000),
        ("two-qubit 4x4", 4, 100_000),
        ("lattice block 4x4", 4, 25_000),
        ("fock space 120x120", 120, 400),
    ]
    print(f"{'workload':>20s} {'steps':>8s} " +
          " ".join(f"{name:>12s}" for name in backends) + "   speedup")
    for label, d, n in cases:
        hs = _random_stack(rng, n, d)
        dts = rng.uniform(0.01, 0.1, n)
        u0 = np.eye(d, dtype=complex)
        times = {}
        for name, fn in backends.items():
            fn(hs[:64], dts[:64], u0)  # warm up
            t0 = time.perf_counter()
            fn(hs, dts, u0)
            times[name] = time.perf_counter() - t0
        cols = " ".join(f"{times[name]:>11.3f}s" for name in backends)
        speedup = (f"{times['python'] / times['compiled']:8.1f}x"
                   if "compiled" in times else "")
        print(f"{label:>20s} {n:>8d} {cols} {speedup}")


def bench_pipeline():
    """Whole-gate comparison: one CNOT run per backend."""
    timings = {}
    for forced, label in ((None, "compiled"), ("1", "python")):
        env = os.environ.copy()
        if forced is None:
            os.environ.pop("QGATE_FORCE_PYTHON", None)
        else:
            os.environ["QGATE_FORCE_PYTHON"] = forced
        for mod in list(sys.modules):
            if mod.startswith("qgate"):
                del sys.modules[mod]
        qgate = importlib.import_module("qgate")
        if qgate.backend_name() != label:
            os.environ.clear()
            os.environ.update(env)
            continue
        harness = importlib.import_module("qgate.harness")
        t0 = time.perf_counter()
        out = harness.run_single_gate("cnot", 300.0)
        timings[label] = time.perf_counter() - t0
        print(f"cnot pipeline [{label:>8s}]: {timings[label]:.3f}s "
              f"(error {out.error:.2e})")
        os.environ.clear()
        os.environ.update(env)
    if len(timings) == 2:
        print(f"pipeline speedup: {timings['python'] / timings['compiled']:.1f}x")


if __name__ == "__main__":
    bench_kernels()
    print()
    bench_pipeline()
