"""Compare the compiled element kernels with the numpy fallback.

Usage::

    python benchmarks/bench_kernels.py [--elements 20000] [--repeat 5]

Prints the best-of-``repeat`` wall time per kernel and backend, the
speed-up, and the largest relative difference between the two results.
"""
from __future__ import annotations

import argparse
import timeit

import numpy as np

from nemato import kernels
from nemato.fem import State, unit_square_mesh
from nemato.functionals import assemble
from nemato.material import MaterialModel, default_model, sample_deformations


def best(fn, repeat: int) -> float:
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def max_rel(a, b) -> float:
    a, b = np.asarray(a), np.asarray(b)
    return float(np.max(np.abs(a - b) / np.maximum(1.0, np.abs(b))))


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--elements", type=int, default=20000)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)
    if not kernels.has_compiled():
        print("compiled extension not available; only the numpy fallback can run")
        return 1
    rng = np.random.default_rng(args.seed)
    F, z = sample_deformations(rng, args.elements)
    Dm = rng.standard_normal((args.elements, 2, 2))
    cases = []
    for label, model in (("elastic iso", default_model()), ("elastic aniso", MaterialModel(mu=1.7, zeta=1.5))):
        cases.append((label, lambda b, m=model: kernels.elastic_eval(m, F, z, True, backend=b)))
    cases.append(("nematic", lambda b: kernels.nematic_eval(Dm, F, True, backend=b)))
    mesh_n = int(np.sqrt(args.elements / 2))
    mesh = unit_square_mesh(mesh_n)
    q = State.reference(mesh, (0.6, 0.8))
    y = q.y + 0.1 / mesh_n * rng.standard_normal(q.y.shape)

    def assembled(b):
        saved = kernels.BACKEND
        kernels.BACKEND = b
        try:
            return assemble(mesh, MaterialModel(mu=1.7), None, 0.0, y, q.m, grad=True)[1:]
        finally:
            kernels.BACKEND = saved

    cases.append((f"assemble {mesh.n_elements} el", assembled))
    print(f"{'kernel':<24}{'python [ms]':>14}{'cython [ms]':>14}{'speed-up':>10}{'max rel diff':>14}")
    for label, fn in cases:
        tp = best(lambda: fn("python"), args.repeat)
        tc = best(lambda: fn("cython"), args.repeat)
        diff = max(max_rel(a, b) for a, b in zip(fn("cython"), fn("python")) if a is not None)
        print(f"{label:<24}{1e3 * tp:>14.2f}{1e3 * tc:>14.2f}{tp / tc:>10.1f}{diff:>14.2e}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
