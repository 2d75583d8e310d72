"""Time the numba and numpy kernel paths, and one eigensolve for scale.

Usage: python3 benchmarks/bench_kernels.py [--sizes 31,101,301] [--repeat 5]
"""

import argparse
import timeit

import numpy as np

from latmag import FieldProfile, LatticeSpec, build_hamiltonian, make_partition, sample_vector_potential, solve_lowest
from latmag import _kernels


def best_of(fn, repeat):
    fn()  # warm-up (includes JIT compilation for numba)
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def main():
    p = argparse.ArgumentParser()
    p.add_argument("--sizes", default="31,101,301")
    p.add_argument("--repeat", type=int, default=5)
    args = p.parse_args()
    if not _kernels.HAVE_NUMBA:
        print("numba unavailable; only the numpy path is timed")
    print(f"{'n':>5} {'kernel':<12} {'numpy ms':>10} {'numba ms':>10} {'speedup':>8}")
    for n in (int(s) for s in args.sizes.split(",")):
        spec = LatticeSpec(n, n)
        pot = sample_vector_potential(spec, FieldProfile.centered(spec, 0.5, 0.01 * 15 / spec.half_width))
        labels = make_partition(spec, 3).labels
        n_groups = int(labels.max()) + 1
        values = np.random.default_rng(0).random(spec.dimension)
        cases = {
            "stencil": (
                lambda: _kernels.stencil_upper_numpy(pot.a_x, pot.a_y, 1.0),
                lambda: _kernels.stencil_upper_numba(pot.a_x, pot.a_y, 1.0),
            ),
            "grain_sums": (
                lambda: _kernels.grain_sums_numpy(values, labels, n_groups),
                lambda: _kernels.grain_sums_numba(values, labels, n_groups),
            ),
        }
        for name, (np_fn, nb_fn) in cases.items():
            t_np = best_of(np_fn, args.repeat) * 1e3
            if _kernels.HAVE_NUMBA:
                t_nb = best_of(nb_fn, args.repeat) * 1e3
                print(f"{n:>5} {name:<12} {t_np:>10.3f} {t_nb:>10.3f} {t_np / t_nb:>8.2f}")
            else:
                print(f"{n:>5} {name:<12} {t_np:>10.3f} {'-':>10} {'-':>8}")
        if n <= 101:
            h = build_hamiltonian(spec, pot)
            t = best_of(lambda: solve_lowest(h, k=10), max(1, args.repeat // 2)) * 1e3
            print(f"{n:>5} {'eigensolve':<12} {t:>10.1f}   (k=10, sparse; dominates a sweep point)")


if __name__ == "__main__":
    main()
