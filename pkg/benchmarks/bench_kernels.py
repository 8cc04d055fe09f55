"""Compare the compiled and pure-numpy element kernels.

Usage: ``python benchmarks/bench_kernels.py [--n-elem 128 512 2048] [--repeat 5]``
"""

import argparse
import timeit

import numpy as np

from dynbiharm import kernels
from dynbiharm.geometry import gauss_legendre_unit


def cases(n_elem: int):
    nodes = np.ascontiguousarray(np.linspace(1.0, 2.0, n_elem + 1))
    xi, wi = gauss_legendre_unit(6)
    pts = np.ascontiguousarray(np.linspace(1.0, 2.0, 4 * n_elem + 1))
    return {
        "bulk_factor": lambda impl: impl.bulk_factor(nodes, xi, wi, 3, np.pi),
        "bulk_mass": lambda impl: impl.bulk_mass(nodes, xi, wi, np.pi),
        "basis_matrix": lambda impl: impl.basis_matrix(nodes, pts, 0),
    }


def best_time(fn, repeat: int) -> float:
    number = 1
    while timeit.timeit(fn, number=number) < 0.05:
        number *= 2
    return min(timeit.repeat(fn, number=number, repeat=repeat)) / number


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--n-elem", type=int, nargs="+", default=[128, 512, 2048])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args(argv)

    impls = kernels.backends()
    print(f"selected backend: {kernels.BACKEND}; available: {', '.join(impls)}")
    header = f"{'kernel':<14}{'n_elem':>8}" + "".join(f"{name + ' [ms]':>16}" for name in impls)
    if "compiled" in impls:
        header += f"{'speed-up':>10}"
    print(header)
    for n in args.n_elem:
        for name, call in cases(n).items():
            times = {k: best_time(lambda impl=impl: call(impl), args.repeat) for k, impl in impls.items()}
            ref = call(impls["python"])
            for k, impl in impls.items():
                if not np.allclose(call(impl), ref, rtol=1e-12, atol=1e-12):
                    raise SystemExit(f"{k} {name} disagrees with the python kernel at n_elem={n}")
            line = f"{name:<14}{n:>8}" + "".join(f"{1e3 * t:>16.3f}" for t in times.values())
            if "compiled" in times:
                line += f"{times['python'] / times['compiled']:>9.1f}x"
            print(line)


if __name__ == "__main__":
    main()
