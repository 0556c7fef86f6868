"""Consumption Laplacian of the intermediates, mu by two routes, and expm.

Nodes of the production/consumption graph of a complex ``y_i`` are the
intermediates (positions ``0..|V|-1``) plus a sink/source node ``*`` at
position ``|V|``.  Edge ``H_l -> H_m`` carries ``kappa_lm``, ``H_l -> *``
carries the total rate into final products, ``* -> H_l`` carries the
production rate ``lambda_il(x)``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from itertools import product
from typing import Mapping

import numpy as np
import sympy as sp

from . import _kernels
from .intermediates import IntermediateDecomposition
from .network import NetworkError
from .tropical import NPoly, RationalN

TREE_CAP = 10
COND_WARN = 1e12


class EnumerationCapExceeded(RuntimeError):
    pass


class ExpmOverflowError(ArithmeticError):
    pass


class IllConditionedWarning(UserWarning):
    pass


@dataclass(frozen=True)
class LaplacianCore:
    """``L^N`` at a numeric ``N`` (columns are the source intermediate)."""

    dim: int
    entries: np.ndarray
    N: float
    names: tuple[str, ...] = ()

    def __array__(self, dtype=None, copy=None):
        return self.entries if dtype is None else self.entries.astype(dtype)


def state_vector(dec: IntermediateDecomposition, xhat) -> np.ndarray:
    """Full species vector from a mapping, a full vector, or a non-intermediate vector."""
    net = dec.net
    if isinstance(xhat, Mapping):
        x = np.zeros(net.n_species)
        for name, v in xhat.items():
            x[net.species_index(name)] = v
        return x
    x = np.asarray(xhat, dtype=float)
    if x.shape == (net.n_species,):
        return x
    keep = dec.non_intermediates
    if x.shape == (len(keep),):
        full = np.zeros(net.n_species)
        full[list(keep)] = x
        return full
    raise ValueError(f"state of length {x.shape} does not match the network")


def _exit_map(dec: IntermediateDecomposition):
    """Consumption edges split into intermediate transfers and exits to W."""
    transfers, exits = [], []
    wpos = {c: p for p, c in enumerate(dec.W)}
    for l, target, idx in dec.consumption_edges():
        m = dec.position(target)
        if m is None:
            exits.append((l, wpos[target], idx))
        else:
            transfers.append((l, m, idx))
    return transfers, exits


def assemble_laplacian(dec: IntermediateDecomposition, N: float,
                       params: Mapping[str, float] | None = None) -> LaplacianCore:
    if not N > 0:
        raise ValueError("N must be positive")
    net = dec.net
    params = net.parameters if params is None else {**net.parameters, **params}
    nv = len(dec.V)
    L = np.zeros((nv, nv))
    transfers, exits = _exit_map(dec)
    for l, m, idx in transfers:
        k = net.reactions[idx].law.value(N, params)
        L[m, l] += k
        L[l, l] -= k
    for l, _, idx in exits:
        L[l, l] -= net.reactions[idx].law.value(N, params)
    for l in range(nv):
        if L[l, l] == 0.0:
            raise NetworkError(
                f"intermediate {dec.intermediate_names[l]!r} with no outgoing consumption")
    return LaplacianCore(nv, L, float(N), dec.intermediate_names)


def exit_rates(dec: IntermediateDecomposition, N: float,
               params: Mapping[str, float] | None = None) -> np.ndarray:
    """Matrix ``K`` with ``K[l, p] = kappa^N_{l, W[p]}``."""
    net = dec.net
    params = net.parameters if params is None else {**net.parameters, **params}
    K = np.zeros((len(dec.V), len(dec.W)))
    for l, p, idx in _exit_map(dec)[1]:
        K[l, p] += net.reactions[idx].law.value(N, params)
    return K


def production_vector(dec: IntermediateDecomposition, i: int, xhat, N: float,
                      params: Mapping[str, float] | None = None) -> np.ndarray:
    """``lambda_i.(x)``: production rates of each intermediate from complex ``i``."""
    net = dec.net
    params = net.parameters if params is None else {**net.parameters, **params}
    x = state_vector(dec, xhat)
    lam = np.zeros(len(dec.V))
    for src, l, idx in dec.production_edges():
        if src == i:
            r = net.reactions[idx]
            lam[l] += r.law.value(N, params) * np.prod(np.power(x, r.source.coeffs))
    return lam


def graph_weights(dec: IntermediateDecomposition, i: int, xhat, N: float,
                  params: Mapping[str, float] | None = None) -> np.ndarray:
    core = assemble_laplacian(dec, N, params)
    nv = core.dim
    w = np.zeros((nv + 1, nv + 1))
    off = core.entries.T.copy()
    np.fill_diagonal(off, 0.0)
    w[:nv, :nv] = off
    w[:nv, nv] = exit_rates(dec, N, params).sum(axis=1)
    w[nv, :nv] = production_vector(dec, i, xhat, N, params)
    return w


def mu_by_matrix_tree(dec: IntermediateDecomposition, i: int, xhat, N: float,
                      params: Mapping[str, float] | None = None,
                      cap: int = TREE_CAP) -> np.ndarray:
    """mu_i. as ratio of spanning-tree weight sums (trees rooted at H_l over rooted at *)."""
    nv = len(dec.V)
    if nv > cap:
        raise EnumerationCapExceeded(f"|V| = {nv} exceeds the enumeration cap {cap}; use mu_by_solve")
    if i not in dec.U:
        raise ValueError(f"complex {i} is not an initial reactant")
    w = graph_weights(dec, i, xhat, N, params)
    den = _kernels.tree_weight_sum(w, nv)
    return np.array([_kernels.tree_weight_sum(w, l) for l in range(nv)]) / den


def _solve(L: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    cond = np.linalg.cond(L)
    if not np.isfinite(cond):
        raise np.linalg.LinAlgError("singular consumption Laplacian (decomposition bug?)")
    if cond > COND_WARN:
        warnings.warn(f"consumption Laplacian condition number {cond:.3g}", IllConditionedWarning,
                      stacklevel=3)
    return np.linalg.solve(L, rhs)


def mu_by_solve(dec: IntermediateDecomposition, i: int, xhat, N: float,
                params: Mapping[str, float] | None = None) -> np.ndarray:
    """mu_i. = -(L^N)^{-1} lambda_i.(x)."""
    L = assemble_laplacian(dec, N, params).entries
    lam = production_vector(dec, i, xhat, N, params)
    if not lam.any():
        return np.zeros_like(lam)
    return -_solve(L, lam)


def mu(dec, i, xhat, N, params=None, cap: int = TREE_CAP) -> np.ndarray:
    if len(dec.V) <= cap:
        return mu_by_matrix_tree(dec, i, xhat, N, params, cap)
    return mu_by_solve(dec, i, xhat, N, params)


def splitting_probabilities(dec: IntermediateDecomposition, N: float,
                            params: Mapping[str, float] | None = None) -> np.ndarray:
    """``pi[l, p]``: fraction of H_l eventually turned into final product ``W[p]``."""
    L = assemble_laplacian(dec, N, params).entries
    K = exit_rates(dec, N, params)
    if L.size == 0:
        return np.zeros((0, len(dec.W)))
    return -_solve(L.T, K)


# -- symbolic trees ------------------------------------------------------------

def enumerate_trees(adjacency: np.ndarray, root: int) -> list[tuple[int, ...]]:
    """All spanning in-trees rooted at ``root`` as parent arrays (root maps to -1)."""
    adj = np.asarray(adjacency, dtype=bool)
    n = adj.shape[0]
    others = [v for v in range(n) if v != root]
    choices = [[u for u in range(n) if u != v and adj[v, u]] for v in others]
    out = []
    for combo in product(*choices):
        parent = [-1] * n
        for v, p in zip(others, combo):
            parent[v] = p
        ok = True
        for v in others:
            seen = 0
            u = v
            while u != root and seen <= n:
                u = parent[u]
                seen += 1
            if u != root:
                ok = False
                break
        if ok:
            out.append(tuple(parent))
    return out


@dataclass(frozen=True)
class SymbolicMu:
    """mu_i. = x^{y_i} * numerators[l] / denominator, as sympy and as RationalN."""

    i: int
    numerator_exprs: tuple[sp.Expr, ...]
    denominator_expr: sp.Expr
    numerators: tuple[RationalN, ...]
    denominator: RationalN


def symbolic_labels(dec: IntermediateDecomposition, i: int):
    """Edge labels of the graph for complex ``i`` (without the x-monomial)."""
    net = dec.net
    nv = len(dec.V)
    labels: dict[tuple[int, int], list] = {}
    transfers, exits = _exit_map(dec)
    for l, m, idx in transfers:
        labels.setdefault((l, m), []).append(net.reactions[idx].law)
    for l, _, idx in exits:
        labels.setdefault((l, nv), []).append(net.reactions[idx].law)
    for src, l, idx in dec.production_edges():
        if src == i:
            labels.setdefault((nv, l), []).append(net.reactions[idx].law)
    return labels


def symbolic_mu(dec: IntermediateDecomposition, i: int, cap: int = TREE_CAP) -> SymbolicMu:
    nv = len(dec.V)
    labels = symbolic_labels(dec, i)
    expr_of = {e: sp.Add(*[law.constant for law in laws]) for e, laws in labels.items()}
    rat_of = {}
    for e, laws in labels.items():
        acc = RationalN.zero()
        for law in laws:
            acc = acc + law.scaled()
        rat_of[e] = acc
    if nv > cap:
        return _symbolic_mu_cramer(i, nv, expr_of)
    adj = np.zeros((nv + 1, nv + 1), dtype=bool)
    for (a, b) in labels:
        adj[a, b] = True

    def tree_sum(root):
        exprs, rats = [], RationalN.zero()
        for parent in enumerate_trees(adj, root):
            edges = [(v, p) for v, p in enumerate(parent) if p >= 0]
            exprs.append(sp.Mul(*[expr_of[e] for e in edges]))
            term = RationalN(NPoly.one())
            for e in edges:
                term = term * rat_of[e]
            rats = rats + term
        return sp.Add(*exprs), rats

    den_expr, den = tree_sum(nv)
    nums = [tree_sum(l) for l in range(nv)]
    return SymbolicMu(i, tuple(e for e, _ in nums), den_expr,
                      tuple(r for _, r in nums), den)


def _symbolic_mu_cramer(i, nv, expr_of) -> SymbolicMu:
    # large |V|: mu = -L^{-1} lambda by Cramer's rule with exact determinants
    from .tropical import rational_from_expr
    L = sp.zeros(nv, nv)
    lam = sp.zeros(nv, 1)
    for (a, b), e in expr_of.items():
        if a == nv:
            lam[b] = e
        elif b == nv:
            L[a, a] -= e
        else:
            L[b, a] += e
            L[a, a] -= e
    det = sp.expand((-L).det(method="berkowitz"))
    nums = []
    for l in range(nv):
        M = -L.copy()
        M[:, l] = lam
        nums.append(sp.expand(M.det(method="berkowitz")))
    to_r = lambda e: RationalN.zero() if e == 0 else rational_from_expr(e)
    return SymbolicMu(i, tuple(nums), det, tuple(to_r(e) for e in nums), to_r(det))


# -- matrix exponential ------------------------------------------------------------

_THETA = {3: 1.495585217958292e-2, 5: 2.539398330063230e-1,
          7: 9.504178996162932e-1, 9: 2.097847961257068e0, 13: 5.371920351148152e0}
_PADE = {
    3: (120., 60., 12., 1.),
    5: (30240., 15120., 3360., 420., 30., 1.),
    7: (17297280., 8648640., 1995840., 277200., 25200., 1512., 56., 1.),
    9: (17643225600., 8821612800., 2075673600., 302702400., 30270240.,
        2162160., 110880., 3960., 90., 1.),
    13: (64764752532480000., 32382376266240000., 7771770303897600.,
         1187353796428800., 129060195264000., 10559470521600.,
         670442572800., 33522128640., 1323241920., 40840800., 960960.,
         16380., 182., 1.),
}
CLAMP_TOL = 1e-12


def _pade(A: np.ndarray, m: int) -> np.ndarray:
    b = _PADE[m]
    n = A.shape[0]
    ident = np.eye(n)
    if m == 13:
        A2 = A @ A
        A4 = A2 @ A2
        A6 = A4 @ A2
        U = A @ (A6 @ (b[13] * A6 + b[11] * A4 + b[9] * A2)
                 + b[7] * A6 + b[5] * A4 + b[3] * A2 + b[1] * ident)
        V = (A6 @ (b[12] * A6 + b[10] * A4 + b[8] * A2)
             + b[6] * A6 + b[4] * A4 + b[2] * A2 + b[0] * ident)
    else:
        powers = [ident, A @ A]
        for _ in range(2, m // 2 + 1):
            powers.append(powers[-1] @ powers[1])
        U = A @ sum(b[2 * k + 1] * powers[k] for k in range(m // 2 + 1))
        V = sum(b[2 * k] * powers[k] for k in range(m // 2 + 1))
    return np.linalg.solve(V - U, V + U)


def expm_dense(A: np.ndarray) -> np.ndarray:
    """Scaling and squaring with degree 3..13 Pade approximants (1-norm selection)."""
    A = np.asarray(A, dtype=float)
    if A.size == 0:
        return A.copy()
    norm = np.linalg.norm(A, 1)
    if not np.isfinite(norm):
        raise ExpmOverflowError(f"non-finite matrix (1-norm {norm})")
    for m in (3, 5, 7, 9):
        if norm <= _THETA[m]:
            return _pade(A, m)
    s = max(0, int(math.ceil(math.log2(norm / _THETA[13]))))
    if s > 1100:
        raise ExpmOverflowError(f"1-norm {norm:.3g} needs {s} squarings")
    X = _pade(A / 2.0**s, 13)
    with np.errstate(over="ignore", invalid="ignore"):
        for _ in range(s):
            X = X @ X
    if not np.all(np.isfinite(X)):
        raise ExpmOverflowError(f"matrix exponential overflowed (1-norm of argument {norm:.3g})")
    return X


def expm(core, t: float) -> np.ndarray:
    """``exp(L t)`` for a Laplacian core (or plain matrix); tiny negatives clamped to 0."""
    if t < 0:
        raise ValueError("t must be non-negative")
    L = core.entries if isinstance(core, LaplacianCore) else np.asarray(core, dtype=float)
    E = expm_dense(L * t)
    E[(E < 0) & (E >= -CLAMP_TOL)] = 0.0
    return E
