"""Compiled vs numpy kernels: tree enumeration and mass-action right-hand side/Jacobian.

    python benchmarks/bench_kernels.py [--repeat 5]
"""

from __future__ import annotations

import argparse
import timeit

import numpy as np

from crnreduce._kernels import available_backends


def _graph(n, rng):
    w = rng.uniform(0.1, 2.0, (n, n)) * (rng.random((n, n)) < 0.7)
    np.fill_diagonal(w, 0.0)
    w[:-1, -1] += 1.0          # every vertex can reach the root
    return w


def _system(n_species, n_reactions, rng):
    source = rng.integers(0, 3, (n_reactions, n_species)).astype(np.int64)
    target = rng.integers(0, 3, (n_reactions, n_species))
    stoich = (target - source).T.astype(float).copy()
    kappa = rng.uniform(0.1, 2.0, n_reactions)
    x = rng.uniform(0.1, 2.0, n_species)
    return x, source, kappa, stoich


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    rng = np.random.default_rng(0)
    backends = available_backends()
    if "cython" not in backends:
        print("compiled kernels not built; only the numpy fallback is timed")

    cases = []
    for n in (4, 5, 6):
        w = _graph(n, rng)
        cases.append((f"tree_weight_sum |V|={n - 1}", "tree_weight_sum", (w, n - 1), 20))
    for ns, nr in ((4, 6), (20, 40)):
        sysargs = _system(ns, nr, rng)
        cases.append((f"mass_action_rhs {ns}x{nr}", "mass_action_rhs", sysargs, 2000))
        cases.append((f"mass_action_jac {ns}x{nr}", "mass_action_jac", sysargs, 500))

    print(f"{'kernel':32s}" + "".join(f"{b:>14s}" for b in backends) + f"{'speedup':>10s}")
    for label, fname, fargs, number in cases:
        times = {}
        ref = None
        for bname, ns in backends.items():
            fn = getattr(ns, fname)
            out = fn(*fargs)
            if ref is None:
                ref = out
            elif not np.allclose(out, ref, rtol=1e-12, atol=0):
                raise SystemExit(f"{label}: backends disagree")
            best = min(timeit.repeat(lambda: fn(*fargs), number=number, repeat=args.repeat))
            times[bname] = best / number * 1e6
        row = f"{label:32s}" + "".join(f"{times[b]:11.2f} us" for b in backends)
        if "cython" in times:
            row += f"{times['python'] / times['cython']:9.1f}x"
        print(row)


if __name__ == "__main__":
    main()
