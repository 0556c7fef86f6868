# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the hot kernels (see ``_pykernels`` for semantics)."""

import numpy as np


cdef bint _reaches_root(Py_ssize_t[::1] parent, Py_ssize_t root, Py_ssize_t n,
                        char[::1] state, Py_ssize_t[::1] path):
    cdef Py_ssize_t start, v, top, i
    for i in range(n):
        state[i] = 0
    state[root] = 1
    for start in range(n):
        top = 0
        v = start
        while state[v] == 0:
            state[v] = 2
            path[top] = v
            top += 1
            v = parent[v]
        if state[v] == 2:
            return False
        for i in range(top):
            state[path[i]] = 1
    return True


def tree_weight_sum(double[:, ::1] w, Py_ssize_t root):
    cdef Py_ssize_t n = w.shape[0]
    cdef Py_ssize_t m = n - 1
    cdef Py_ssize_t i, k, v, u
    cdef double total = 0.0, weight
    others_a = np.empty(max(m, 1), dtype=np.intp)
    deg_a = np.zeros(max(m, 1), dtype=np.intp)
    idx_a = np.zeros(max(m, 1), dtype=np.intp)
    cand_a = np.zeros((max(m, 1), n), dtype=np.intp)
    parent_a = np.full(n, -1, dtype=np.intp)
    state_a = np.zeros(n, dtype=np.int8)
    path_a = np.zeros(n, dtype=np.intp)
    cdef Py_ssize_t[::1] others = others_a, deg = deg_a, idx = idx_a
    cdef Py_ssize_t[::1] parent = parent_a, path = path_a
    cdef Py_ssize_t[:, ::1] cand = cand_a
    cdef char[::1] state = state_a.view(np.int8)

    i = 0
    for v in range(n):
        if v != root:
            others[i] = v
            i += 1
    for i in range(m):
        v = others[i]
        for u in range(n):
            if u != v and w[v, u] != 0.0:
                cand[i, deg[i]] = u
                deg[i] += 1
        if deg[i] == 0:
            return 0.0

    while True:
        for i in range(m):
            parent[others[i]] = cand[i, idx[i]]
        if _reaches_root(parent, root, n, state, path):
            weight = 1.0
            for i in range(m):
                weight *= w[others[i], parent[others[i]]]
            total += weight
        k = 0
        while k < m:
            idx[k] += 1
            if idx[k] < deg[k]:
                break
            idx[k] = 0
            k += 1
        if k == m:
            break
    return total


cdef inline double _ipow(double x, long long c):
    cdef double out = 1.0
    cdef long long j
    for j in range(c):
        out *= x
    return out


def mass_action_rhs(double[::1] x, long long[:, ::1] source, double[::1] kappa,
                    double[:, ::1] stoich):
    cdef Py_ssize_t m = source.shape[0], n = source.shape[1]
    cdef Py_ssize_t r, k
    cdef double rate
    out_a = np.zeros(n)
    cdef double[::1] out = out_a
    for r in range(m):
        rate = kappa[r]
        for k in range(n):
            if source[r, k]:
                rate *= _ipow(x[k], source[r, k])
        if rate != 0.0:
            for k in range(n):
                out[k] += stoich[k, r] * rate
    return out_a


def mass_action_jac(double[::1] x, long long[:, ::1] source, double[::1] kappa,
                    double[:, ::1] stoich):
    cdef Py_ssize_t m = source.shape[0], n = source.shape[1]
    cdef Py_ssize_t r, k, k2, s
    cdef double term
    jac_a = np.zeros((n, n))
    cdef double[:, ::1] jac = jac_a
    for r in range(m):
        for k in range(n):
            if source[r, k] == 0:
                continue
            term = kappa[r] * source[r, k] * _ipow(x[k], source[r, k] - 1)
            for k2 in range(n):
                if k2 != k and source[r, k2]:
                    term *= _ipow(x[k2], source[r, k2])
            if term != 0.0:
                for s in range(n):
                    jac[s, k] += stoich[s, r] * term
    return jac_a
