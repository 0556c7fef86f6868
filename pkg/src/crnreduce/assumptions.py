"""Fast-consumption condition on the intermediates: exact sufficient tests and a numeric probe.

For a produced intermediate ``H_l``, an intermediate ``H_m`` it can reach
and a final product ``y_j`` reachable from ``H_m``, the condition asks that

    N^c * e_m^T exp(N^-c * eps * L^N) e_l -> 0,   c = beta*_l - a_j,

for every ``eps > 0``.  Three exact exponent tests can prove it; the numeric
probe can only support or contradict it on a finite grid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from . import linalg
from .intermediates import IntermediateDecomposition, is_intermediate_acyclic
from .network import MissingParameterError, ScalingSpec
from .tropical import N as NSYM, exponent_str

PROVED = "PROVED"
PROVED_PROP1 = "PROVED_PROP1"
PROVED_PROP2 = "PROVED_PROP2"
PROVED_PROP3 = "PROVED_PROP3"
NUMERIC_SUPPORT = "NUMERIC_SUPPORT"
VIOLATED_NUMERIC = "VIOLATED_NUMERIC"
UNKNOWN = "UNKNOWN"
NOT_APPLICABLE = "NOT_APPLICABLE"
FAIL = "FAIL"

EXIT_CODES = {PROVED: 0, PROVED_PROP1: 0, PROVED_PROP2: 0, PROVED_PROP3: 0,
              NUMERIC_SUPPORT: 0, VIOLATED_NUMERIC: 2, UNKNOWN: 3}

DEFAULT_NGRID = (10.0, 10.0**1.5, 100.0, 10.0**2.5, 1000.0)
DEFAULT_EPS = (0.1, 1.0)


@dataclass(frozen=True)
class ScaleSummary:
    """``a[j]``: least abundance exponent in product ``j``; ``beta_star[l]``: fastest feed of ``H_l``."""

    a: dict
    beta_star: dict


def compute_scale_summary(dec: IntermediateDecomposition, spec: ScalingSpec) -> ScaleSummary:
    net = dec.net
    a = {}
    for j in dec.W:
        support = net.complexes[j].stoich
        a[j] = min((spec.alpha_of(net.species[k]) for k in support), default=math.inf)
    beta_star = {l: -math.inf for l in range(len(dec.V))}
    for i, l, idx in dec.production_edges():
        b = spec.betas[idx]
        if beta_star[l] == -math.inf or b > beta_star[l]:
            beta_star[l] = b
    return ScaleSummary(a, beta_star)


def required_triples(dec: IntermediateDecomposition, summary: ScaleSummary):
    """``(l, m, j)`` with H_l produced from U, H_l => H_m and H_m => y_j."""
    out = []
    for l, c in enumerate(dec.vcomplex):
        if summary.beta_star[l] == -math.inf:
            continue
        for m, cm in enumerate(dec.vcomplex):
            if not dec.reaches(c, cm):
                continue
            for j in dec.W:
                if dec.reaches(cm, j):
                    out.append((l, m, j))
    return out


def _gap(summary: ScaleSummary, l: int, j: int):
    """``beta*_l - a_j`` or ``-inf`` when the product complex is empty."""
    a = summary.a[j]
    if a == math.inf:
        return -math.inf
    return summary.beta_star[l] - a


@dataclass(frozen=True)
class PropResult:
    status: str
    evidence: tuple[dict, ...] = ()
    reason: str = ""

    @property
    def witness(self):
        return next((e for e in self.evidence if not e.get("ok", True)), None)


@dataclass(frozen=True)
class AssumptionVerdict:
    status: str
    evidence: dict = field(default_factory=dict)

    @property
    def exit_code(self) -> int:
        return EXIT_CODES[self.status]


def _names(dec, l, m, j):
    net = dec.net
    return {"l": dec.intermediate_names[l], "l_prime": dec.intermediate_names[m],
            "j": net.format_complex(net.complexes[j])}


def _consumption_exponents(dec):
    """Leading exponent of each transfer edge and of each total consumption rate."""
    from .tropical import RationalN
    net = dec.net
    edge, total = {}, {}
    for l, target, idx in dec.consumption_edges():
        r = net.reactions[idx].law.scaled()
        total[l] = total.get(l, RationalN.zero()) + r
        m = dec.position(target)
        if m is not None:
            edge[(l, m)] = edge.get((l, m), RationalN.zero()) + r
    return ({k: v.leading().exponent for k, v in edge.items()},
            {k: v.leading().exponent for k, v in total.items()})


def check_prop1_uniform_order(dec: IntermediateDecomposition, spec: ScalingSpec,
                              summary: ScaleSummary | None = None) -> PropResult:
    """All consumption constants are ``kappa * N^gamma``; need gamma > beta*_l - a_j."""
    net = dec.net
    summary = summary or compute_scale_summary(dec, spec)
    etas = set()
    for _, _, idx in dec.consumption_edges():
        law = net.reactions[idx].law
        if law.kappa.has(NSYM):
            return PropResult(NOT_APPLICABLE, reason="rate constant depends on N beyond N^eta")
        etas.add(law.eta)
    if len(etas) != 1:
        return PropResult(NOT_APPLICABLE,
                          reason=f"consumption exponents not uniform: {sorted(map(str, etas))}")
    gamma = etas.pop()
    pairs = sorted({(l, j) for l, _, j in required_triples(dec, summary)})
    ev, ok_all = [], True
    for l, j in pairs:
        c = _gap(summary, l, j)
        ok = c == -math.inf or gamma > c
        ok_all &= ok
        ev.append({**_names(dec, l, l, j), "gamma": str(gamma), "gap": exponent_str(c), "ok": ok})
    for e in ev:
        e.pop("l_prime")
    return PropResult(PROVED_PROP1 if ok_all else FAIL, tuple(ev))


def _paths(succ, start, end):
    stack = [(start, (start,))]
    while stack:
        u, path = stack.pop()
        if u == end:
            yield path
            continue
        for v in succ.get(u, ()):
            stack.append((v, path + (v,)))


def check_prop2_acyclic(dec: IntermediateDecomposition, spec: ScalingSpec,
                        summary: ScaleSummary | None = None) -> PropResult:
    """Acyclic intermediates: each path l -> ... -> m must be damped.

    With c = beta*_l - a_j and d_s the total consumption of the s-th node,
    a path is damped if its jump-chain weight beats the prefactor,
    ``c + sum(lead k_s - lead d_s) < 0``, or if every node on it is consumed
    faster than the time window shrinks, ``min lead d_s > c``.
    """
    if not is_intermediate_acyclic(dec):
        return PropResult(NOT_APPLICABLE, reason="intermediate graph has a cycle")
    summary = summary or compute_scale_summary(dec, spec)
    edge, total = _consumption_exponents(dec)
    succ: dict[int, list[int]] = {}
    for (a, b) in edge:
        succ.setdefault(a, []).append(b)
    ev, ok_all = [], True
    for l, m, j in required_triples(dec, summary):
        c = _gap(summary, l, j)
        for path in _paths(succ, l, m):
            if c == -math.inf:
                ok, weight, slowest = True, None, None
            else:
                weight = c + sum(edge[(path[s], path[s + 1])] - total[path[s]]
                                 for s in range(len(path) - 1))
                slowest = min(total[p] for p in path)
                ok = weight < 0 or slowest > c
            ok_all &= ok
            ev.append({**_names(dec, l, m, j), "path": [dec.intermediate_names[p] for p in path],
                       "gap": exponent_str(c),
                       "path_weight": None if weight is None else str(weight),
                       "slowest_consumption": None if slowest is None else str(slowest),
                       "ok": ok})
    return PropResult(PROVED_PROP2 if ok_all else FAIL, tuple(ev))


def check_prop3_mu_orders(dec: IntermediateDecomposition, spec: ScalingSpec,
                          summary: ScaleSummary | None = None) -> PropResult:
    """Leading exponent of ``N^(beta*_l - 2 a_j) mu_{i m}(N^alpha x)`` must be negative."""
    net = dec.net
    summary = summary or compute_scale_summary(dec, spec)
    producers: dict[int, set] = {}
    for i, l, _ in dec.production_edges():
        producers.setdefault(l, set()).add(i)
    mus = {i: linalg.symbolic_mu(dec, i) for i in dec.U}
    ev, ok_all = [], True
    for l, m, j in required_triples(dec, summary):
        for i in sorted(producers.get(l, ())):
            a = summary.a[j]
            sm = mus[i]
            num = sm.numerators[m]
            if a == math.inf or num.is_zero:
                e = -math.inf
            else:
                shift = sum((c * spec.alpha_of(net.species[k])
                             for k, c in net.complexes[i].stoich.items()), Fraction(0))
                e = (summary.beta_star[l] - 2 * a + shift
                     + num.leading().exponent - sm.denominator.leading().exponent)
            ok = e < 0
            ok_all &= ok
            ev.append({**_names(dec, l, m, j), "i": net.format_complex(net.complexes[i]),
                       "exponent": exponent_str(e), "ok": ok})
    return PropResult(PROVED_PROP3 if ok_all else FAIL, tuple(ev))


def assumption_quantity(core: linalg.LaplacianCore, l: int, m: int, gap, eps: float) -> float:
    """``N^gap * e_m^T exp(N^-gap * eps * L) e_l``."""
    if gap == -math.inf:
        return 0.0
    g = float(gap)
    E = linalg.expm(core, eps * core.N ** (-g))
    return core.N ** g * E[m, l]


def numeric_rate_to_zero_diagnostic(dec: IntermediateDecomposition, spec: ScalingSpec,
                                    Ngrid: Sequence[float] = DEFAULT_NGRID,
                                    epsilons: Sequence[float] = DEFAULT_EPS,
                                    decrease: float = 10.0, final_tol: float = 1e-4,
                                    floor: float = 1e-2,
                                    summary: ScaleSummary | None = None) -> PropResult:
    summary = summary or compute_scale_summary(dec, spec)
    triples = required_triples(dec, summary)
    try:
        cores = {n: linalg.assemble_laplacian(dec, n) for n in Ngrid}
    except MissingParameterError as exc:
        return PropResult(UNKNOWN, reason=f"numeric probe needs parameter values: {exc}")
    ev, statuses = [], []
    for l, m, j in triples:
        c = _gap(summary, l, j)
        for eps in epsilons:
            row = {**_names(dec, l, m, j), "gap": exponent_str(c), "eps": eps}
            if c == -math.inf:
                row.update(values=[0.0] * len(Ngrid), verdict="auto-pass")
                ev.append(row)
                continue
            values, err = [], None
            for n in Ngrid:
                try:
                    values.append(assumption_quantity(cores[n], l, m, c, eps))
                except linalg.ExpmOverflowError as exc:
                    values.append(None)
                    err = str(exc)
            row["values"] = values
            if err is not None:
                row.update(verdict="overflow", error=err)
                statuses.append(UNKNOWN)
            elif values[-1] <= values[0] / decrease and values[-1] < final_tol:
                row["verdict"] = "support"
                statuses.append(NUMERIC_SUPPORT)
            elif min(values) >= floor:
                row["verdict"] = "violated"
                statuses.append(VIOLATED_NUMERIC)
            else:
                row["verdict"] = "unknown"
                statuses.append(UNKNOWN)
            ev.append(row)
    if VIOLATED_NUMERIC in statuses:
        status = VIOLATED_NUMERIC
    elif all(s == NUMERIC_SUPPORT for s in statuses):
        status = NUMERIC_SUPPORT
    else:
        status = UNKNOWN
    return PropResult(status, tuple(ev))


def check_all(dec: IntermediateDecomposition, spec: ScalingSpec, **diag_kw) -> AssumptionVerdict:
    summary = compute_scale_summary(dec, spec)
    evidence = {
        "a": {dec.net.format_complex(dec.net.complexes[j]): exponent_str(v)
              for j, v in summary.a.items()},
        "beta_star": {dec.intermediate_names[l]: exponent_str(v)
                      for l, v in summary.beta_star.items()},
        "required": [_names(dec, *t) for t in required_triples(dec, summary)],
    }
    status = None
    for key, fn in (("prop1", check_prop1_uniform_order), ("prop2", check_prop2_acyclic),
                    ("prop3", check_prop3_mu_orders)):
        res = fn(dec, spec, summary)
        evidence[key] = {"status": res.status, "reason": res.reason, "evidence": list(res.evidence)}
        if status is None and res.status.startswith("PROVED"):
            status = res.status
    numeric = numeric_rate_to_zero_diagnostic(dec, spec, summary=summary, **diag_kw)
    evidence["numeric"] = {"status": numeric.status, "evidence": list(numeric.evidence)}
    if not evidence["required"]:
        status = PROVED
    return AssumptionVerdict(status or numeric.status, evidence)
