"""Time the JIT kernels against their numpy forms on a synthetic mesh.

Usage: python3 benchmarks/bench_kernels.py [--triangles 50000] [--repeats 5]

Compilation happens in a warmup pass and is excluded from the timings;
each reported number is the best of the repeat runs.
"""

import argparse
import time

import numpy as np

from bankaudit import kernels


def synthetic_mesh(n_triangles, seed=7):
    rng = np.random.default_rng(seed)
    n_vertices = max(8, n_triangles // 2)
    positions = rng.standard_normal((n_vertices, 3))
    triangles = rng.integers(0, n_vertices, size=(n_triangles, 3)).astype(np.int64)
    return positions, triangles


def edge_keys(triangles, n_vertices):
    a = triangles[:, [0, 1, 2]].reshape(-1).astype(np.int64)
    b = triangles[:, [1, 2, 0]].reshape(-1).astype(np.int64)
    return np.sort(np.minimum(a, b) * np.int64(n_vertices) + np.maximum(a, b))


def best_of(fn, args, repeats):
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - start)
    return best


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--triangles", type=int, default=50_000)
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()

    numba_set = kernels.numba_impls()
    numpy_set = kernels.numpy_impls()
    if numba_set is None:
        raise SystemExit("numba is not importable; nothing to compare")

    positions, triangles = synthetic_mesh(args.triangles)
    keys = edge_keys(triangles, len(positions))
    rng = np.random.default_rng(11)
    normals = rng.standard_normal((64, 3))
    normals /= np.linalg.norm(normals, axis=1, keepdims=True)
    offsets = rng.uniform(0.5, 2.0, size=64)

    calls = {
        "valence_summary": (keys,),
        "signed_volume_sum": (positions, triangles),
        "volume_moments": (positions, triangles),
        "degenerate_count": (positions, triangles, 1e-12),
        "contained_count": (positions, normals, offsets, 1e-9),
    }

    for name, call_args in calls.items():  # warmup: compile outside the timings
        numba_set[name](*call_args)

    print(f"{args.triangles} triangles, {len(positions)} vertices, "
          f"best of {args.repeats}")
    print(f"{'kernel':<20} {'numba ms':>10} {'numpy ms':>10} {'numpy/numba':>12}")
    for name, call_args in calls.items():
        t_nb = best_of(numba_set[name], call_args, args.repeats)
        t_np = best_of(numpy_set[name], call_args, args.repeats)
        print(f"{name:<20} {t_nb * 1e3:>10.3f} {t_np * 1e3:>10.3f} "
              f"{t_np / t_nb:>11.2f}x")


if __name__ == "__main__":
    main()
