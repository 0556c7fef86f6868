"""Reduced network on the non-intermediate species and its N -> infinity limit."""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping

import numpy as np
import sympy as sp

from . import linalg
from .intermediates import IntermediateDecomposition
from .network import (Complex, NetworkError, RateLaw, Reaction, ReactionNetwork,
                      ScalingSpec, format_kappa, make_scaling)
from .tropical import NPoly, RationalN, exponent_str


class LimitError(NetworkError):
    pass


@dataclass(frozen=True)
class ReducedReaction:
    source: Complex          # over the reduced species
    target: Complex
    rate: sp.Expr            # rate constant as a function of N (state monomial excluded)
    rational: RationalN      # same constant as a sum of N-monomials
    origin: str              # "direct", "intermediates" or "both"
    source_index: int        # complex index in the original network
    target_index: int

    @property
    def lead(self):
        return self.rational.leading()


@dataclass(frozen=True, eq=False)
class ReducedNetwork:
    """Reduced reaction system; ``base`` is an ordinary network over the reduced species."""

    original: ReactionNetwork
    dec: IntermediateDecomposition
    species: tuple[str, ...]
    reactions: tuple[ReducedReaction, ...]
    base: ReactionNetwork
    beta_r: dict = field(default_factory=dict)

    def label(self, r: ReducedReaction) -> str:
        return f"{r.source.format(self.species)} -> {r.target.format(self.species)}"

    @property
    def labels(self) -> list[str]:
        return [self.label(r) for r in self.reactions]


# -- reduce ------------------------------------------------------------------------

def _cancel_atoms(num_terms: list[Counter], den_terms: list[Counter]):
    """Drop edge labels shared by every term of numerator and denominator."""
    common = None
    for term in num_terms + den_terms:
        common = Counter(term) if common is None else common & term
    if not common:
        return num_terms, den_terms
    return [t - common for t in num_terms], [t - common for t in den_terms]


def _product(term: Counter, atoms) -> sp.Expr:
    return sp.Mul(*[atoms[a] ** k for a, k in sorted(term.items())])


def _product_r(term: Counter, ratoms) -> RationalN:
    out = RationalN(NPoly.one())
    for a, k in term.items():
        for _ in range(k):
            out = out * ratoms[a]
    return out


def _path_rates(dec: IntermediateDecomposition, i: int, cap: int):
    """Intermediate-mediated rate constants ``{j: (expr, RationalN)}`` out of complex ``i``."""
    net = dec.net
    nv = len(dec.V)
    labels = linalg.symbolic_labels(dec, i)
    atoms, ratoms = {}, {}
    for e, laws in labels.items():
        atoms[("edge",) + e] = sp.Add(*[law.constant for law in laws])
        acc = RationalN.zero()
        for law in laws:
            acc = acc + law.scaled()
        ratoms[("edge",) + e] = acc
    exits: dict[int, list[tuple[int, tuple]]] = {}
    n_exits = Counter(l for l, t, _ in dec.consumption_edges() if dec.position(t) is None)
    for l, target, idx in dec.consumption_edges():
        if dec.position(target) is None:
            # a lone exit is the same label as the edge into the star node
            key = ("edge", l, nv) if n_exits[l] == 1 else ("exit", l, target)
            law = net.reactions[idx].law
            atoms[key], ratoms[key] = law.constant, law.scaled()
            exits.setdefault(target, []).append((l, key))
    out = {}
    if nv > cap:
        sm = linalg.symbolic_mu(dec, i, cap)
        for j, items in exits.items():
            expr = sp.cancel(sp.Add(*[atoms[k] * sm.numerator_exprs[l] for l, k in items])
                             / sm.denominator_expr)
            rat = RationalN.zero()
            for l, k in items:
                rat = rat + ratoms[k] * sm.numerators[l]
            if not rat.is_zero:
                out[j] = (expr, rat / sm.denominator)
        return out
    adj = np.zeros((nv + 1, nv + 1), dtype=bool)
    for (a, b) in labels:
        adj[a, b] = True

    def trees(root):
        return [Counter(("edge", v, p) for v, p in enumerate(parent) if p >= 0)
                for parent in linalg.enumerate_trees(adj, root)]

    den = trees(nv)
    rooted = {l: trees(l) for l in range(nv)}
    for j, items in exits.items():
        num = [t + Counter([k]) for l, k in items for t in rooted[l]]
        if not num:
            continue
        num_c, den_c = _cancel_atoms(num, den)
        expr = sp.Add(*[_product(t, atoms) for t in num_c]) / sp.Add(*[_product(t, atoms) for t in den_c])
        rnum = RationalN.zero()
        for t in num:
            rnum = rnum + _product_r(t, ratoms)
        rden = RationalN.zero()
        for t in den:
            rden = rden + _product_r(t, ratoms)
        out[j] = (expr, rnum / rden)
    return out


def reduce(net: ReactionNetwork, dec: IntermediateDecomposition,
           spec: ScalingSpec | None = None, cap: int = linalg.TREE_CAP) -> ReducedNetwork:
    """Eliminate the intermediates; rates are exact rational functions of N."""
    keep = dec.non_intermediates
    species = tuple(net.species[k] for k in keep)
    vset = set(dec.vcomplex)
    collected: dict[tuple[int, int], dict] = {}
    for idx in dec.R0:
        r = net.reactions[idx]
        key = (net.complex_index(r.source), net.complex_index(r.target))
        collected[key] = {"direct": r.law}
    for i in dec.U:
        for j, (expr, rat) in _path_rates(dec, i, cap).items():
            if j == i or j in vset or not dec.reaches(i, j):
                continue
            collected.setdefault((i, j), {})["path"] = (expr, rat)

    reactions = []
    for (i, j), parts in sorted(collected.items()):
        direct, path = parts.get("direct"), parts.get("path")
        if direct is not None and path is not None:
            expr, rat, origin = direct.constant + path[0], direct.scaled() + path[1], "both"
        elif direct is not None:
            expr, rat, origin = direct.constant, direct.scaled(), "direct"
        else:
            expr, rat, origin = path[0], path[1], "intermediates"
        src = net.complexes[i].project(keep)
        tgt = net.complexes[j].project(keep)
        reactions.append(ReducedReaction(src, tgt, expr, rat, origin, i, j))

    base_rx = []
    for rr in reactions:
        law = RateLaw(rr.rate, 0)
        if rr.origin == "direct":
            idx = next(k for k in dec.R0 if net.complex_index(net.reactions[k].source) == rr.source_index
                       and net.complex_index(net.reactions[k].target) == rr.target_index)
            law = net.reactions[idx].law
        base_rx.append(Reaction(rr.source, rr.target, law))
    params = {k: v for k, v in net.parameters.items()}
    base = ReactionNetwork(species, tuple(base_rx), (), params)
    # keep our reaction order aligned with the canonical order of ``base``
    order = {(r.source, r.target): n for n, r in enumerate(base.reactions)}
    reactions.sort(key=lambda rr: order[(rr.source, rr.target)])
    red = ReducedNetwork(net, dec, species, tuple(reactions), base)
    if spec is not None:
        red.beta_r.update(compute_beta_r(red, spec))
    return red


def compute_beta_r(red: ReducedNetwork, spec: ScalingSpec) -> dict[int, Fraction]:
    """Exact leading N-exponent of each reduced rate at state ``N^alpha x``."""
    out = {}
    for n, rr in enumerate(red.reactions):
        shift = sum((c * spec.alpha_of(red.species[k]) for k, c in rr.source.stoich.items()),
                    Fraction(0))
        out[n] = rr.lead.exponent + shift
    return out


def reduced_spec(red: ReducedNetwork, spec: ScalingSpec) -> ScalingSpec:
    return make_scaling(red.base, {s: spec.alpha_of(s) for s in red.species})


# -- single-scale check ----------------------------------------------------------------

@dataclass(frozen=True)
class SingleScaleVerdict:
    passed: bool
    violations: tuple[dict, ...]

    @property
    def witness(self):
        return self.violations[0] if self.violations else None


def check_single_scale(red: ReducedNetwork, spec: ScalingSpec) -> SingleScaleVerdict:
    """Every changing species must be at least as abundant (in N) as its reaction rate."""
    beta_r = red.beta_r or compute_beta_r(red, spec)
    beta = spec.betas
    net = red.original
    bad = []
    for n, rr in enumerate(red.reactions):
        b = beta_r[n]
        delta = np.subtract(rr.target.coeffs, rr.source.coeffs)
        for k, d in enumerate(delta):
            a = spec.alpha_of(red.species[k])
            if d != 0 and b > a:
                bad.append({"reaction": red.label(rr), "species": red.species[k],
                            "beta_r": str(b), "alpha": str(a), "kind": "exponent"})
        if rr.origin in ("direct", "both"):
            for idx in red.dec.R0:
                r = net.reactions[idx]
                if (net.complex_index(r.source), net.complex_index(r.target)) == \
                        (rr.source_index, rr.target_index) and b < beta[idx]:
                    bad.append({"reaction": red.label(rr), "species": None, "beta_r": str(b),
                                "beta": str(beta[idx]), "kind": "direct-order"})
    return SingleScaleVerdict(not bad, tuple(bad))


# -- limiting network ---------------------------------------------------------------

@dataclass(frozen=True)
class LimitingReaction:
    source: Complex
    target: Complex
    coefficient: sp.Expr      # N-free constant, folded species included
    monomial: Complex         # state monomial of the rate (over limiting species)
    origin: str               # label of the reduced reaction
    beta_r: Fraction

    @property
    def mass_action(self) -> bool:
        return self.monomial == self.source


@dataclass(frozen=True)
class LimitingNetwork:
    species: tuple[str, ...]
    reactions: tuple[LimitingReaction, ...]
    folded: dict           # species name -> symbol standing for its (constant) initial value
    removed: tuple[dict, ...]
    cancelled: tuple[dict, ...]    # divergent entries that cancelled between source and target
    duplicates: tuple[tuple[int, ...], ...]
    parameters: dict = field(default_factory=dict)

    def label(self, r: LimitingReaction) -> str:
        return f"{r.source.format(self.species)} -> {r.target.format(self.species)}"

    def rates(self, x, values: Mapping[str, float]) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return np.array([coefficient_value(r.coefficient, values)
                         * float(np.prod(np.power(x, r.monomial.coeffs)))
                         for r in self.reactions])

    def stoichiometric_matrix(self) -> np.ndarray:
        m = np.array([np.subtract(r.target.coeffs, r.source.coeffs) for r in self.reactions],
                     dtype=float)
        return m.reshape(len(self.reactions), len(self.species)).T.copy()


def coefficient_value(expr: sp.Expr, values: Mapping[str, float]) -> float:
    subs = {}
    for s in expr.free_symbols:
        if s.name not in values:
            raise NetworkError(f"no value for {s.name!r}")
        subs[s] = values[s.name]
    return float(expr.subs(subs))


def folded_symbol(name: str, taken) -> sp.Symbol:
    base = f"{name}_0"
    while base in taken:
        base += "_"
    return sp.Symbol(base, positive=True)


def _limit_entry(coef: int, beta_r: Fraction, alpha: Fraction):
    if coef == 0 or beta_r < alpha:
        return 0
    if beta_r == alpha:
        return coef
    return None  # divergent


def build_limiting(red: ReducedNetwork, spec: ScalingSpec) -> LimitingNetwork:
    """Rescaled complexes, N-free leading rate constants, catalysts folded into constants."""
    beta_r = red.beta_r or compute_beta_r(red, spec)
    names = red.species
    alphas = [spec.alpha_of(s) for s in names]
    kept, removed, cancelled = [], [], []
    for n, rr in enumerate(red.reactions):
        b = beta_r[n]
        src, tgt = [], []
        for k in range(len(names)):
            ys, yt = rr.source.coeffs[k], rr.target.coeffs[k]
            es, et = _limit_entry(ys, b, alphas[k]), _limit_entry(yt, b, alphas[k])
            if es is None or et is None:
                if ys != yt:
                    raise LimitError(
                        f"divergent complex entry not cancelled: species {names[k]!r} "
                        f"in {red.label(rr)} (beta_r={b} > alpha={alphas[k]})")
                cancelled.append({"reaction": red.label(rr), "species": names[k]})
                es = et = 0
            src.append(es)
            tgt.append(et)
        src, tgt = Complex(tuple(src)), Complex(tuple(tgt))
        if src == tgt:
            removed.append({"reaction": red.label(rr), "reason": "zero reaction vector"})
            continue
        coef = rr.lead.coefficient
        if coef == 0:
            removed.append({"reaction": red.label(rr), "reason": "zero limiting rate"})
            continue
        kept.append((rr, src, tgt, coef, b))

    changing = set()
    for _, src, tgt, _, _ in kept:
        changing |= {k for k in range(len(names)) if src.coeffs[k] != tgt.coeffs[k]}
    in_rates = {k for rr, *_ in kept for k in rr.source.stoich}
    fold = sorted(in_rates - changing)
    keep = [k for k in range(len(names)) if k not in fold]
    taken = set(red.original.parameters) | {str(s) for rr, *_ in kept for s in rr.rate.free_symbols}
    folded = {}
    for k in fold:
        sym = folded_symbol(names[k], taken | {str(s) for s in folded.values()})
        folded[names[k]] = sym
    reactions = []
    for rr, src, tgt, coef, b in kept:
        factor = sp.Mul(*[folded[names[k]] ** c for k, c in rr.source.stoich.items() if k in fold])
        reactions.append(LimitingReaction(src.project(keep), tgt.project(keep),
                                          coef * factor, rr.source.project(keep),
                                          red.label(rr), b))
    seen: dict[tuple, list[int]] = {}
    for n, r in enumerate(reactions):
        seen.setdefault((r.source, r.target), []).append(n)
    dups = tuple(tuple(v) for v in seen.values() if len(v) > 1)
    return LimitingNetwork(tuple(names[k] for k in keep), tuple(reactions), folded,
                           tuple(removed), tuple(cancelled), dups,
                           dict(red.original.parameters))


def serialize_limiting(lim: LimitingNetwork) -> str:
    """Limiting network in the network file format (duplicates summed, non-mass-action noted)."""
    lines = [f"species: {' '.join(lim.species) if lim.species else ''}".rstrip()]
    used = set().union(*[r.coefficient.free_symbols for r in lim.reactions]) if lim.reactions else set()
    params = {k: v for k, v in lim.parameters.items() if any(s.name == k for s in used)}
    if params:
        lines.append("parameters:")
        lines += [f"  {k} = {params[k]!r}" for k in sorted(params)]
    if lim.folded:
        lines.append("# constant species: " + ", ".join(
            f"{name} = {sym}" for name, sym in lim.folded.items()))
    if not lim.reactions:
        lines.append("# no reactions: z(t) = z(0)")
    lines.append("reactions:")
    merged: dict[tuple, list[LimitingReaction]] = {}
    for r in lim.reactions:
        merged.setdefault((r.source, r.target), []).append(r)
    for (src, tgt), rs in merged.items():
        coef = sp.Add(*[r.coefficient for r in rs])
        line = f"  {src.format(lim.species)} -> {tgt.format(lim.species)} @ {format_kappa(coef)} N^0"
        if any(not r.mass_action for r in rs):
            line += "  # rate monomial: " + ", ".join(r.monomial.format(lim.species) for r in rs)
        lines.append(line)
    return "\n".join(lines) + "\n"


def serialize_reduced(red: ReducedNetwork, spec: ScalingSpec | None = None) -> str:
    from .network import serialize_network
    if spec is not None:
        spec = ScalingSpec({s: spec.alpha_of(s) for s in red.species})
    return serialize_network(red.base, spec)


# -- sum identity ------------------------------------------------------------------------

@dataclass(frozen=True)
class SumIdentityResidual:
    """Relative residuals of three exit-flux identities at one state.

    ``per_intermediate``: exits of H_l alone balance its production from y_i.
    ``total``: exits summed over all intermediates balance total production.
    ``per_product``: flux into y_j equals production weighted by splitting probabilities.
    """

    per_intermediate: float
    total: float
    per_product: float


def _rel(a, b) -> float:
    """Largest entrywise gap, relative to the largest entry of either vector."""
    a, b = np.atleast_1d(a), np.atleast_1d(b)
    scale = max(np.max(np.abs(a), initial=0.0), np.max(np.abs(b), initial=0.0))
    return 0.0 if scale == 0 else float(np.max(np.abs(a - b)) / scale)


def verify_sum_identity(red: ReducedNetwork | None, dec: IntermediateDecomposition, xhat,
                        N: float) -> SumIdentityResidual:
    K = linalg.exit_rates(dec, N)
    pi = linalg.splitting_probabilities(dec, N) if len(dec.V) else np.zeros((0, len(dec.W)))
    per_l = tot = per_j = 0.0
    for i in dec.U:
        m = linalg.mu(dec, i, xhat, N)
        lam = linalg.production_vector(dec, i, xhat, N)
        per_l = max(per_l, _rel(K.sum(axis=1) * m, lam))
        tot = max(tot, _rel((K.sum(axis=1) * m).sum(), lam.sum()))
        per_j = max(per_j, _rel(K.T @ m, pi.T @ lam))
    return SumIdentityResidual(per_l, tot, per_j)


def reduced_report(red: ReducedNetwork, spec: ScalingSpec) -> dict:
    beta_r = red.beta_r or compute_beta_r(red, spec)
    return {
        "reactions": [
            {"reaction": red.label(rr), "rate": sp.sstr(rr.rate), "origin": rr.origin,
             "beta_r": exponent_str(beta_r[n]),
             "leading": {"exponent": exponent_str(rr.lead.exponent),
                         "coefficient": sp.sstr(rr.lead.coefficient)}}
            for n, rr in enumerate(red.reactions)
        ],
    }


def limiting_report(lim: LimitingNetwork) -> dict:
    return {
        "reactions": [{"reaction": lim.label(r), "rate": sp.sstr(r.coefficient),
                       "monomial": r.monomial.format(lim.species), "from": r.origin,
                       "beta_r": str(r.beta_r), "mass_action": r.mass_action}
                      for r in lim.reactions],
        "folded_species": {k: str(v) for k, v in lim.folded.items()},
        "removed": list(lim.removed),
        "cancelled_divergent": list(lim.cancelled),
        "duplicate_limiting_reactions": [[lim.label(lim.reactions[n]) for n in grp]
                                         for grp in lim.duplicates],
    }
