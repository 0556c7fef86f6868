"""Pure-Python/numpy versions of the hot kernels.

Semantics must match ``_ckernels.pyx`` exactly; the test-suite runs both.
"""

from itertools import product

import numpy as np


def _reaches_root(parent, root, n):
    state = [0] * n  # 0 unknown, 1 reaches root, 2 on current walk
    state[root] = 1
    for start in range(n):
        path = []
        v = start
        while state[v] == 0:
            state[v] = 2
            path.append(v)
            v = parent[v]
        if state[v] == 2:
            return False
        for u in path:
            state[u] = 1
    return True


def tree_weight_sum(w, root):
    """Sum over spanning in-trees rooted at ``root`` of the product of edge weights.

    ``w[v, u]`` is the weight of edge ``v -> u`` (0 = no edge).
    """
    w = np.asarray(w, dtype=float)
    n = w.shape[0]
    others = [v for v in range(n) if v != root]
    choices = [[u for u in range(n) if u != v and w[v, u] != 0.0] for v in others]
    parent = [-1] * n
    total = 0.0
    for combo in product(*choices):
        for v, p in zip(others, combo):
            parent[v] = p
        if _reaches_root(parent, root, n):
            weight = 1.0
            for v, p in zip(others, combo):
                weight *= w[v, p]
            total += weight
    return total


def mass_action_rhs(x, source, kappa, stoich):
    """``stoich @ (kappa * prod(x ** source))``."""
    rates = kappa * np.prod(np.power(x[None, :], source), axis=1)
    return stoich @ rates


def mass_action_jac(x, source, kappa, stoich):
    m, n = source.shape
    d = np.zeros((m, n))
    for r in range(m):
        for k in range(n):
            c = source[r, k]
            if c == 0:
                continue
            term = kappa[r] * c * x[k] ** (c - 1)
            for k2 in range(n):
                if k2 != k and source[r, k2]:
                    term *= x[k2] ** source[r, k2]
            d[r, k] = term
    return stoich @ d
