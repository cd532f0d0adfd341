"""Time the compiled and pure-Python kernels on staircase-sized inputs.

    python benchmarks/bench_kernels.py [--repeat R]
"""
import argparse
import timeit

import numpy as np

from emlab import _kernels
from emlab import inclusions as inc
from emlab import weakform as wf


def staircase_mesh():
    u, _ = inc.staircase_stage(np.diag([0.5, 0.25]), 4)
    return u


def bench(label, fn, repeat):
    t = min(timeit.repeat(fn, number=1, repeat=repeat))
    print(f"  {label:<8s} {t * 1e3:10.2f} ms")
    return t


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)

    backends = ["python"] + (["cython"] if _kernels.compiled_available() else [])
    u = staircase_mesh()
    tris = u.triangles()
    lam = wf.make_bump_field((0.1, 0.9, 0.1, 0.9), (1.0, 0.0), degree=3)
    nodes, weights = wf._unit_gauss(wf.triangle_rule_size(3))
    print(f"mesh: {u.n_cells} cells (staircase stage 4)")

    print("bump gradient integrals over all cells")
    times = {}
    for b in backends:
        times[b] = bench(b, lambda: _kernels.bump_gradient_integrals(tris, lam.box, 3, nodes, weights, backend=b), args.repeat)
    if len(times) == 2:
        print(f"  speedup  {times['python'] / times['cython']:10.1f}x")

    print("2x2 singular values of all cell gradients")
    times = {}
    for b in backends:
        times[b] = bench(b, lambda: _kernels.singular_values_2x2(u.grads, backend=b), args.repeat)
    if len(times) == 2:
        print(f"  speedup  {times['python'] / times['cython']:10.1f}x")

    if len(backends) == 1:
        print("compiled kernels not built; only the Python backend was timed")


if __name__ == "__main__":
    main()
