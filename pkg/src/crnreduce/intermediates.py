"""Intermediate species: validation, index sets and reachability."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from graphlib import CycleError, TopologicalSorter
from typing import Iterable

from .network import Complex, NetworkError, ReactionNetwork


class IntermediateError(NetworkError):
    pass


@dataclass(frozen=True, eq=False)
class IntermediateDecomposition:
    """Index sets of a network with a chosen set of intermediates.

    ``V`` holds species indices; ``U``, ``W`` hold complex indices; ``R0``
    and ``R1`` hold reaction indices.  ``vcomplex[l]`` is the complex index
    of the unit complex of intermediate ``V[l]``.
    """

    net: ReactionNetwork
    V: tuple[int, ...]
    vcomplex: tuple[int, ...]
    U: tuple[int, ...]
    W: tuple[int, ...]
    R0: tuple[int, ...]
    R1: tuple[int, ...]
    _succ: dict = field(repr=False, default_factory=dict)

    @property
    def intermediate_names(self) -> tuple[str, ...]:
        return tuple(self.net.species[k] for k in self.V)

    @property
    def non_intermediates(self) -> tuple[int, ...]:
        vs = set(self.V)
        return tuple(k for k in range(self.net.n_species) if k not in vs)

    def is_intermediate_complex(self, c: int) -> bool:
        return c in self._vpos

    @cached_property
    def _vpos(self) -> dict[int, int]:
        return {c: l for l, c in enumerate(self.vcomplex)}

    def position(self, c: int) -> int | None:
        """Position in ``V`` of the intermediate whose unit complex is ``c``."""
        return self._vpos.get(c)

    def successors(self, c: int) -> tuple[int, ...]:
        return self._succ.get(c, ())

    @cached_property
    def _closure(self) -> dict[int, frozenset[int]]:
        # intermediates reachable from each intermediate through intermediate-only paths
        out = {}
        for c in self.vcomplex:
            seen = {c}
            queue = deque([c])
            while queue:
                u = queue.popleft()
                for v in self.successors(u):
                    if v in self._vpos and v not in seen:
                        seen.add(v)
                        queue.append(v)
            out[c] = frozenset(seen)
        return out

    def _reach_set(self, c: int) -> frozenset[int]:
        if c in self._vpos:
            starts = self._closure[c]
        else:
            starts = set()
            for v in self.successors(c):
                if v in self._vpos:
                    starts |= self._closure[v]
        return frozenset(t for s in starts for t in self.successors(s))

    @cached_property
    def reachability(self) -> "ReachabilityTable":
        pairs = set()
        for c in range(len(self.net.complexes)):
            for t in self._reach_set(c):
                pairs.add((c, t))
            if c in self._vpos:
                pairs.add((c, c))
        return ReachabilityTable(frozenset(pairs))

    def reaches(self, c1: int, c2: int) -> bool:
        return (c1, c2) in self.reachability.through_intermediates

    def consumption_edges(self):
        """Reactions consuming intermediates: ``(l, target complex, reaction index)``."""
        for idx, r in enumerate(self.net.reactions):
            src = self.net.complex_index(r.source)
            l = self.position(src)
            if l is not None:
                yield l, self.net.complex_index(r.target), idx

    def production_edges(self):
        """Reactions ``y_i -> H_l`` with ``y_i`` not an intermediate: ``(i, l, index)``."""
        for idx, r in enumerate(self.net.reactions):
            src = self.net.complex_index(r.source)
            tgt = self.net.complex_index(r.target)
            if src not in self._vpos and tgt in self._vpos:
                yield src, self._vpos[tgt], idx

    def summary(self) -> dict:
        net = self.net
        name = lambda c: net.format_complex(net.complexes[c])
        return {
            "V": list(self.intermediate_names),
            "U": [name(c) for c in self.U],
            "W": [name(c) for c in self.W],
            "R0": [net.reaction_label(i) for i in self.R0],
            "R1": [net.reaction_label(i) for i in self.R1],
        }


@dataclass(frozen=True)
class ReachabilityTable:
    through_intermediates: frozenset[tuple[int, int]]


def _successor_map(net: ReactionNetwork) -> dict[int, tuple[int, ...]]:
    succ: dict[int, list[int]] = {}
    for r in net.reactions:
        succ.setdefault(net.complex_index(r.source), []).append(net.complex_index(r.target))
    return {k: tuple(v) for k, v in succ.items()}


def validate_intermediates(net: ReactionNetwork,
                           proposed: Iterable[str] | None = None) -> IntermediateDecomposition:
    """Check the proposed intermediates and build the index sets.

    Defaults to the intermediates declared in the network.
    """
    names = list(net.intermediates if proposed is None else proposed)
    V = tuple(net.species_index(h) for h in names)
    if len(set(V)) != len(V):
        raise IntermediateError("intermediate listed twice")
    n = net.n_species
    vcomplex = []
    for k in V:
        unit = Complex.unit(k, n)
        for c in net.complexes:
            if c.coeffs[k] and c != unit:
                raise IntermediateError(
                    f"species {net.species[k]!r} appears in a non-unit complex "
                    f"{net.format_complex(c)!r}")
        if unit not in net.complexes:
            raise IntermediateError(
                f"intermediate {net.species[k]!r} not on any U->W path (never reacts)")
        vcomplex.append(net.complex_index(unit))
    vset = set(vcomplex)
    succ = _successor_map(net)
    pred: dict[int, list[int]] = {}
    for s, ts in succ.items():
        for t in ts:
            pred.setdefault(t, []).append(s)

    def sweep(seeds, edges):
        seen = set(seeds)
        queue = deque(seeds)
        while queue:
            u = queue.popleft()
            for v in edges.get(u, ()):
                if v in vset and v not in seen:
                    seen.add(v)
                    queue.append(v)
        return seen

    produced = sweep([t for s, ts in succ.items() if s not in vset for t in ts if t in vset], succ)
    drained = sweep([s for t, ss in pred.items() if t not in vset for s in ss if s in vset], pred)
    for k, c in zip(V, vcomplex):
        if c not in produced or c not in drained:
            raise IntermediateError(
                f"intermediate {net.species[k]!r} not on any U->W path")

    U, W, R0, R1 = set(), set(), [], []
    for idx, r in enumerate(net.reactions):
        s, t = net.complex_index(r.source), net.complex_index(r.target)
        if s not in vset:
            R1.append(idx)
            if t not in vset:
                R0.append(idx)
            else:
                U.add(s)
        elif t not in vset:
            W.add(t)
    return IntermediateDecomposition(net, V, tuple(vcomplex), tuple(sorted(U)),
                                     tuple(sorted(W)), tuple(R0), tuple(R1), succ)


def reaches_through_intermediates(dec: IntermediateDecomposition,
                                  y: Complex, y2: Complex) -> bool:
    net = dec.net
    return dec.reaches(net.complex_index(y), net.complex_index(y2))


def is_intermediate_acyclic(dec: IntermediateDecomposition) -> bool:
    graph = {c: [t for t in dec.successors(c) if dec.is_intermediate_complex(t)]
             for c in dec.vcomplex}
    try:
        tuple(TopologicalSorter(graph).static_order())
    except CycleError:
        return False
    return True


def detect_intermediates(net: ReactionNetwork) -> IntermediateDecomposition:
    """Greedy maximal valid intermediate set among unit-complex species."""
    candidates = []
    for k, name in enumerate(net.species):
        try:
            validate_intermediates(net, [name])
        except IntermediateError:
            continue
        candidates.append(name)
    chosen: list[str] = []
    for name in candidates:
        try:
            validate_intermediates(net, chosen + [name])
        except IntermediateError:
            continue
        chosen.append(name)
    return validate_intermediates(net, chosen)
