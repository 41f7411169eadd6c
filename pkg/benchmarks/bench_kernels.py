"""Compare the jit-compiled and pure-numpy fixed-point batch kernels.

Run:  python benchmarks/bench_kernels.py [grid-points-per-axis]

The workload is the region-sampling hot path: a dense grid of net loads
on the bundled two-line feeder, each solved from a flat start.
"""

import sys
import time

import numpy as np

import polyrest as pr
from polyrest import kernels


def workload(resolution: int):
    m = pr.build_bus_matrices(pr.parse_network(pr.bundled_network("three_node")))
    axis = np.linspace(-10.0, 10.0, resolution)
    p1, p2 = np.meshgrid(axis, axis)
    loads = np.column_stack([p1.ravel(), p2.ravel()]).astype(np.complex128)
    return m, loads


def run(fn, m, loads, repeats=3):
    best = np.inf
    for _ in range(repeats):
        start = time.perf_counter()
        v, status, iters = fn(m.z, loads, m.v0, 1e-10, 1000, 1e-3)
        best = min(best, time.perf_counter() - start)
    return best, int((status == kernels.STATUS_CONVERGED).sum())


def main():
    resolution = int(sys.argv[1]) if len(sys.argv) > 1 else 201
    m, loads = workload(resolution)
    print(f"workload: {loads.shape[0]} flat-start solves on a 2-bus feeder")

    t_np, conv_np = run(kernels.fixed_point_batch_numpy, m, loads)
    print(f"numpy   : {t_np:8.4f} s  ({conv_np} converged)")

    if kernels.fixed_point_batch_numba is None:
        print("numba   : unavailable (not installed or disabled)")
        return
    kernels.fixed_point_batch_numba(m.z, loads[:1], m.v0, 1e-10, 10, 1e-3)
    t_nb, conv_nb = run(kernels.fixed_point_batch_numba, m, loads)
    print(f"numba   : {t_nb:8.4f} s  ({conv_nb} converged)")
    assert conv_np == conv_nb, "kernel disagreement"
    print(f"speedup : {t_np / t_nb:.1f}x")


if __name__ == "__main__":
    main()
