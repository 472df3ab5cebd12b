"""Compare the compiled and numpy element kernels, and put them next to a full solve.

Run with ``python3 benchmarks/bench_kernels.py [n ...]``. The last column shows
the share of one split-node solve spent in element stiffness evaluation; the
rest is sparse assembly and factorization, which neither backend touches.
"""
import argparse
import time

import numpy as np

from dislox import _kernels_py
from dislox.dislocation import solve_split_node
from dislox.manufactured import manufactured_case

try:
    from dislox import _ckernels
except ImportError:
    _ckernels = None


def best_of(fn, repeat=5):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("sizes", nargs="*", type=int, default=[32, 64, 128])
    args = parser.parse_args()
    print(f"{'n':>5s} {'elements':>9s} {'numpy K [ms]':>13s} {'cython K [ms]':>14s} {'speedup':>8s}"
          f" {'strain np/cy':>13s} {'solve [ms]':>11s} {'K share':>8s}")
    for n in args.sizes:
        case = manufactured_case("smooth_jump", n)
        mesh = case.mesh
        coords, tris = mesh.nodes, mesh.elements
        lam, mu = case.model.element_coefficients(mesh)
        u = np.random.default_rng(0).standard_normal(coords.shape)
        t_py = best_of(lambda: _kernels_py.element_stiffness(coords, tris, lam, mu))
        s_py = best_of(lambda: _kernels_py.element_strain(coords, tris, u))
        if _ckernels is not None:
            t_cy = best_of(lambda: _ckernels.element_stiffness(coords, tris, lam, mu))
            s_cy = best_of(lambda: _ckernels.element_strain(coords, tris, u))
            cy, speed, strain = f"{1e3 * t_cy:14.2f}", f"{t_py / t_cy:8.1f}", f"{s_py / s_cy:13.1f}"
        else:
            t_cy, cy, speed, strain = t_py, f"{'n/a':>14s}", f"{'n/a':>8s}", f"{'n/a':>13s}"
        t_solve = best_of(lambda: solve_split_node(mesh, case.model, case.ft, case.slip, case.bc, verify=False), 3)
        print(f"{n:5d} {mesh.n_elements:9d} {1e3 * t_py:13.2f} {cy} {speed} {strain} {1e3 * t_solve:11.1f}"
              f" {2 * min(t_py, t_cy) / t_solve:8.1%}")


if __name__ == "__main__":
    main()
