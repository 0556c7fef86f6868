"""Full, reduced, limiting and delayed-convolution dynamics, plus convergence sweeps."""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
from scipy.integrate import solve_ivp

from . import _kernels, linalg
from .intermediates import IntermediateDecomposition
from .network import ReactionNetwork, ScalingSpec
from .reduction import (LimitError, LimitingNetwork, ReducedNetwork, build_limiting,
                        check_single_scale, reduce)


class IntegrationError(RuntimeError):
    pass


@dataclass(frozen=True)
class SimConfig:
    T: float
    N: float = 1.0
    rtol: float = 1e-8
    atol: float = 1e-12
    n_points: int = 201
    convergence: bool = True
    method: str = "Radau"

    def __post_init__(self):
        if not self.T > 0:
            raise ValueError("T must be positive")
        for name in ("rtol", "atol"):
            v = getattr(self, name)
            if not 0 < v <= 1e-2:
                raise ValueError(f"{name} must lie in (0, 1e-2], got {v}")
        if not self.N > 0:
            raise ValueError("N must be positive")

    @property
    def times(self) -> np.ndarray:
        return np.linspace(0.0, self.T, self.n_points)


@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray
    states: np.ndarray          # (len(times), len(species))
    species: tuple[str, ...]

    def column(self, name: str) -> np.ndarray:
        return self.states[:, self.species.index(name)]

    def select(self, names: Sequence[str]) -> np.ndarray:
        return self.states[:, [self.species.index(s) for s in names]]

    def rescaled(self, spec: ScalingSpec, N: float) -> "Trajectory":
        scale = np.array([float(N) ** -float(spec.alpha_of(s)) for s in self.species])
        return Trajectory(self.times, self.states * scale, self.species)


@dataclass(frozen=True)
class TrajectoryBundle:
    """Rescaled non-intermediate trajectories on a common grid."""

    times: np.ndarray
    species: tuple[str, ...]
    full: np.ndarray
    reduced: np.ndarray
    limiting: np.ndarray | None
    sup_errors: dict = field(default_factory=dict)


def _mass_action_system(source: np.ndarray, kappa: np.ndarray, stoich: np.ndarray):
    source = np.ascontiguousarray(source, dtype=np.int64)
    kappa = np.ascontiguousarray(kappa, dtype=float)
    stoich = np.ascontiguousarray(stoich, dtype=float)

    def rhs(t, x):
        return _kernels.mass_action_rhs(x, source, kappa, stoich)

    def jac(t, x):
        return _kernels.mass_action_jac(x, source, kappa, stoich)

    return rhs, jac


def _integrate(rhs, jac, x0, cfg: SimConfig, method=None) -> np.ndarray:
    method = method or cfg.method
    kw = {"jac": jac} if method in ("Radau", "BDF", "LSODA") else {}
    t = cfg.times
    sol = solve_ivp(rhs, (0.0, cfg.T), np.asarray(x0, dtype=float), method=method, t_eval=t,
                    rtol=cfg.rtol, atol=cfg.atol, **kw)
    if sol.status != 0:
        raise IntegrationError(
            f"{method} failed at t={sol.t[-1] if sol.t.size else 0.0:.3g}: {sol.message}; "
            f"try loosening rtol (now {cfg.rtol:g}) or atol (now {cfg.atol:g})")
    return sol.y.T.copy()


def _state(names: Sequence[str], values) -> np.ndarray:
    if isinstance(values, Mapping):
        unknown = set(values) - set(names)
        if unknown:
            raise ValueError(f"unknown species in initial state: {sorted(unknown)}")
        return np.array([float(values.get(s, 0.0)) for s in names])
    x = np.asarray(values, dtype=float)
    if x.shape != (len(names),):
        raise ValueError(f"initial state has shape {x.shape}, expected ({len(names)},)")
    return x


def simulate_full(net: ReactionNetwork, dec: IntermediateDecomposition | None,
                  spec: ScalingSpec | None, cfg: SimConfig, initial) -> Trajectory:
    """Raw mass-action trajectory of every species at scale ``cfg.N``."""
    x0 = _state(net.species, initial)
    if cfg.convergence and dec is not None and np.any(x0[list(dec.V)] != 0):
        raise ValueError("convergence runs need zero initial intermediates")
    rhs, jac = _mass_action_system(net.source_matrix(), net.rate_constants(cfg.N),
                                   net.stoichiometric_matrix())
    return Trajectory(cfg.times, _integrate(rhs, jac, x0, cfg), net.species)


def simulate_reduced(red: ReducedNetwork, spec: ScalingSpec | None, cfg: SimConfig,
                     initial) -> Trajectory:
    base = red.base
    z0 = _state(base.species, initial)
    if not base.reactions:
        return Trajectory(cfg.times, np.tile(z0, (cfg.n_points, 1)), base.species)
    rhs, jac = _mass_action_system(base.source_matrix(), base.rate_constants(cfg.N),
                                   base.stoichiometric_matrix())
    return Trajectory(cfg.times, _integrate(rhs, jac, z0, cfg), base.species)


def limiting_values(lim: LimitingNetwork, z0: Mapping[str, float],
                    params: Mapping[str, float] | None = None) -> dict:
    """Parameter values plus the constant levels of folded species."""
    values = dict(lim.parameters if params is None else params)
    for name, sym in lim.folded.items():
        values[sym.name] = float(z0[name])
    return values


def simulate_limiting(lim: LimitingNetwork, cfg: SimConfig, initial: Mapping[str, float],
                      params: Mapping[str, float] | None = None) -> Trajectory:
    """N-free limiting dynamics; folded species stay at their initial values."""
    names = tuple(lim.species)
    z0 = np.array([float(initial.get(s, 0.0)) for s in names])
    values = limiting_values(lim, initial, params)
    from .reduction import coefficient_value
    kappa = np.array([coefficient_value(r.coefficient, values) for r in lim.reactions])
    if not lim.reactions:
        return Trajectory(cfg.times, np.tile(z0, (cfg.n_points, 1)), names)
    monomials = np.array([r.monomial.coeffs for r in lim.reactions], dtype=np.int64)
    rhs, jac = _mass_action_system(monomials.reshape(len(lim.reactions), len(names)), kappa,
                                   lim.stoichiometric_matrix())
    method = "DOP853" if cfg.method == "Radau" else cfg.method
    return Trajectory(cfg.times, _integrate(rhs, jac, z0, cfg, method=method), names)


# -- delayed-convolution oracle ---------------------------------------------------------

def phi_functions(A: np.ndarray, order: int = 3) -> list[np.ndarray]:
    """``[exp(A), phi_1(A), ..., phi_order(A)]`` from one augmented exponential."""
    n = A.shape[0]
    M = np.zeros(((order + 1) * n, (order + 1) * n))
    M[:n, :n] = A
    for k in range(order):
        M[k * n:(k + 1) * n, (k + 1) * n:(k + 2) * n] = np.eye(n)
    E = linalg.expm_dense(M)
    return [E[:n, k * n:(k + 1) * n] for k in range(order + 1)]


def simulate_delayed_oracle(net: ReactionNetwork, dec: IntermediateDecomposition,
                            spec: ScalingSpec | None, cfg: SimConfig, initial,
                            step: float | None = None, max_steps: int = 2_000_000,
                            tol: float = 1e-13, max_iter: int = 50) -> Trajectory:
    """Non-intermediate dynamics with the intermediates replaced by their convolution.

    ``x_check(t) = exp(tL) x_check(0) + int_0^t exp(L(t-s)) Lambda(x_hat(s)) ds`` is
    carried by its semigroup update; production is linear between steps so
    the local integrals are exact phi-function expressions.  The slow part
    uses the trapezoidal rule, solved by fixed-point iteration.
    """
    if not dec.V:
        return simulate_full(net, None, spec, cfg, initial)
    x0 = _state(net.species, initial)
    keep = list(dec.non_intermediates)
    V = list(dec.V)
    h = step if step is not None else cfg.T / max(cfg.n_points - 1, 1) / 10
    n_steps = int(math.ceil(cfg.T / h - 1e-9))
    if n_steps > max_steps:
        raise ValueError(f"{n_steps} steps exceed the history cap {max_steps}")
    h = cfg.T / n_steps

    k = net.rate_constants(cfg.N)
    S = net.stoichiometric_matrix()[keep]
    src = net.source_matrix()[:, keep]
    slow = [r for r in range(len(net.reactions)) if r in set(dec.R1)]
    S_slow, src_slow, k_slow = S[:, slow], src[slow], k[slow]
    nv = len(V)
    prod = np.zeros((nv, len(slow)))
    for col, r in enumerate(slow):
        l = dec.position(net.complex_index(net.reactions[r].target))
        if l is not None:
            prod[l, col] = 1.0
    B = np.zeros((len(keep), nv))
    for l, target, r in dec.consumption_edges():
        if dec.position(target) is None:
            B[:, l] += np.asarray(net.complexes[target].coeffs, dtype=float)[keep] * k[r]
    L = linalg.assemble_laplacian(dec, cfg.N).entries
    E, P1, P2, P3 = phi_functions(h * L, 3)
    hP1, hP2 = h * P1, h * P2
    h2P2, h2P3 = h * h * P2, h * h * P3

    def rates(x):
        return k_slow * np.prod(np.power(x[None, :], src_slow), axis=1)

    x = x0[keep].copy()
    c = x0[V].copy()
    out_t = cfg.times
    grid = np.linspace(0.0, cfg.T, n_steps + 1)
    out = np.empty((len(out_t), net.n_species))
    targets = np.searchsorted(grid, out_t - 1e-12 * cfg.T)
    targets = np.clip(targets, 0, n_steps)
    pending = dict()
    for idx_out, step_idx in enumerate(targets):
        pending.setdefault(int(step_idx), []).append(idx_out)

    def record(n, xv, cv):
        for idx_out in pending.get(n, ()):
            out[idx_out, keep] = xv
            out[idx_out, V] = cv

    w = rates(x)
    record(0, x, c)
    for n in range(n_steps):
        lam0 = prod @ w
        g0 = S_slow @ w
        base_int = hP1 @ c + h2P2 @ lam0
        x_new = x + h * g0 + B @ base_int
        for _ in range(max_iter):
            w1 = rates(x_new)
            dlam = prod @ w1 - lam0
            cand = x + 0.5 * h * (g0 + S_slow @ w1) + B @ (base_int + h2P3 @ dlam)
            if np.max(np.abs(cand - x_new)) <= tol * (1.0 + np.max(np.abs(cand))):
                x_new = cand
                break
            x_new = cand
        else:
            raise IntegrationError(f"fixed-point iteration did not converge at t={grid[n]:.3g}; "
                                   "reduce the step")
        w1 = rates(x_new)
        c = E @ c + hP1 @ lam0 + hP2 @ (prod @ w1 - lam0)
        x, w = x_new, w1
        record(n + 1, x, c)
    return Trajectory(out_t, out, net.species)


# -- comparisons -------------------------------------------------------------------------

def scaled_initial(net_species: Sequence[str], spec: ScalingSpec, N: float,
                   z0: Mapping[str, float]) -> dict:
    """``x_hat(0) = N^alpha z0``; intermediates and omitted species start at zero."""
    return {s: float(N) ** float(spec.alpha_of(s)) * float(v) for s, v in z0.items()
            if s in net_species}


def _sup(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.max(np.abs(a - b))) if a.size else 0.0


def compare(net: ReactionNetwork, dec: IntermediateDecomposition, spec: ScalingSpec,
            cfg: SimConfig, z0: Mapping[str, float], red: ReducedNetwork | None = None,
            lim: LimitingNetwork | None | bool = None) -> TrajectoryBundle:
    """Full vs reduced (vs limiting) on the rescaled non-intermediate species."""
    red = red or reduce(net, dec, spec)
    if lim is None:
        try:
            lim = build_limiting(red, spec) if check_single_scale(red, spec).passed else False
        except LimitError:
            lim = False
    x0 = scaled_initial(net.species, spec, cfg.N, z0)
    full = simulate_full(net, dec, spec, cfg, x0).rescaled(spec, cfg.N)
    names = red.species
    zr = simulate_reduced(red, spec, cfg, scaled_initial(names, spec, cfg.N, z0)).rescaled(spec, cfg.N)
    F, R = full.select(names), zr.select(names)
    errors = {"full_reduced": _sup(F, R)}
    Z = None
    if lim:
        zl = simulate_limiting(lim, cfg, {s: float(z0.get(s, 0.0)) for s in names})
        Z = np.empty_like(F)
        for k, s in enumerate(names):
            Z[:, k] = zl.column(s) if s in lim.species else float(z0.get(s, 0.0))
        errors["full_limiting"] = _sup(F, Z)
        errors["reduced_limiting"] = _sup(R, Z)
    return TrajectoryBundle(cfg.times, names, F, R, Z, errors)


@dataclass(frozen=True)
class SweepRow:
    N: float
    full_reduced: float | None
    full_limiting: float | None
    error: str | None = None


@dataclass(frozen=True)
class SweepResult:
    rows: tuple[SweepRow, ...]
    verdict: str

    def column(self, key: str) -> list:
        return [getattr(r, key) for r in self.rows]

    @property
    def strictly_decreasing(self) -> bool:
        vals = self.column("full_reduced")
        return None not in vals and all(b < a for a, b in zip(vals, vals[1:]))


def _sweep_cell(args):
    net, dec_names, spec, cfg, z0 = args
    from .intermediates import validate_intermediates
    dec = validate_intermediates(net, dec_names)
    try:
        b = compare(net, dec, spec, cfg, z0)
    except (IntegrationError, ValueError, np.linalg.LinAlgError) as exc:
        return SweepRow(cfg.N, None, None, str(exc))
    return SweepRow(cfg.N, b.sup_errors["full_reduced"], b.sup_errors.get("full_limiting"))


def convergence_sweep(net: ReactionNetwork, dec: IntermediateDecomposition, spec: ScalingSpec,
                      cfg: SimConfig, z0: Mapping[str, float], Ngrid: Sequence[float],
                      require_assumptions: bool = True, jobs: int = 1) -> SweepResult:
    """Sup-norm errors over ``[0, T]`` for each N; cells fail independently."""
    from .assumptions import VIOLATED_NUMERIC, check_all
    verdict = check_all(dec, spec).status
    if require_assumptions and verdict == VIOLATED_NUMERIC:
        raise ValueError("fast-consumption condition violated numerically; "
                         "pass require_assumptions=False for a control run")
    cells = [(net, dec.intermediate_names, spec,
              SimConfig(cfg.T, float(n), cfg.rtol, cfg.atol, cfg.n_points, cfg.convergence,
                        cfg.method), dict(z0)) for n in Ngrid]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_sweep_cell, cells))
    else:
        rows = [_sweep_cell(c) for c in cells]
    return SweepResult(tuple(rows), verdict)


# -- long-term behaviour -------------------------------------------------------------

def long_term_probe(net: ReactionNetwork, dec: IntermediateDecomposition, spec: ScalingSpec,
                    N: float = 100.0, T_long: float = 50.0, z0: float = 2.0,
                    species: str = "A", n_points: int = 501, rtol: float = 1e-10,
                    atol: float = 1e-14) -> dict:
    """Full vs limiting dynamics far beyond compact horizons, plus a slow-manifold start.

    The slow-manifold start puts each intermediate at its quasi-steady level
    ``-(L^{-1} Lambda)(x_hat(0))`` so its derivative vanishes initially.
    """
    cfg = SimConfig(T_long, N, rtol, atol, n_points)
    red = reduce(net, dec, spec)
    lim = build_limiting(red, spec)
    init = {species: z0}
    full = simulate_full(net, dec, spec, cfg, scaled_initial(net.species, spec, N, init))
    zl = simulate_limiting(lim, cfg, init)
    x_hat = full.rescaled(spec, N).column(species)
    z = zl.column(species)
    report = {
        "N": N, "T_long": T_long, "z0": z0,
        "full_final": float(x_hat[-1]), "limiting_final": float(z[-1]),
        "limiting_max_drift": float(np.max(np.abs(z - z0))),
        "full_exceeds_limiting": float(np.max(x_hat - z)),
        "diverges": bool(abs(x_hat[-1] - z[-1]) > 1e-2),
    }
    if len(dec.V):
        hname = dec.intermediate_names[0]
        report["intermediate_final"] = float(full.column(hname)[-1])
    # slow manifold: intermediates at quasi-steady state for the initial state
    x0 = scaled_initial(net.species, spec, N, init)
    lam = np.zeros(len(dec.V))
    for i in dec.U:
        lam += linalg.production_vector(dec, i, x0, N)
    qss = -np.linalg.solve(linalg.assemble_laplacian(dec, N).entries, lam) if len(dec.V) else lam
    x0_sm = dict(x0)
    for l, name in enumerate(dec.intermediate_names):
        x0_sm[name] = float(qss[l])
    cfg_sm = SimConfig(T_long, N, rtol, atol, n_points, convergence=False)
    full_sm = simulate_full(net, dec, spec, cfg_sm, x0_sm)
    zr = simulate_reduced(red, spec, cfg_sm, scaled_initial(red.species, spec, N, init))
    inter = full_sm.select(dec.intermediate_names)
    report["slow_manifold"] = {
        "intermediate_initial": [float(v) for v in qss],
        "intermediate_max_drift": float(np.max(np.abs(inter - qss))) if qss.size else 0.0,
        "full_reduced_sup": _sup(full_sm.rescaled(spec, N).select(red.species),
                                 zr.rescaled(spec, N).select(red.species)),
    }
    return report


def highest_rate_pruned(net: ReactionNetwork, dec: IntermediateDecomposition,
                        N: float) -> ReactionNetwork:
    """Keep only the fastest consumption reaction of each intermediate (at scale ``N``)."""
    k = net.rate_constants(N)
    best: dict[int, int] = {}
    for l, _, idx in dec.consumption_edges():
        if l not in best or k[idx] > k[best[l]]:
            best[l] = idx
    consuming = {idx for _, _, idx in dec.consumption_edges()}
    kept = [r for n, r in enumerate(net.reactions) if n not in consuming or n in best.values()]
    return ReactionNetwork(net.species, tuple(kept), net.intermediates, net.parameters)


def growth_slope(times: np.ndarray, values: np.ndarray, tail: float = 0.5) -> float:
    """Least-squares slope over the last ``tail`` fraction of the time grid."""
    start = int(len(times) * (1 - tail))
    return float(np.polyfit(times[start:], values[start:], 1)[0])


def default_horizon(red: ReducedNetwork, spec: ScalingSpec, z0: Mapping[str, float],
                    N: float) -> float:
    """Ten characteristic times of the fastest rescaled reduced rate at ``z0``."""
    base = red.base
    if not base.reactions:
        return 10.0
    x = np.array([float(N) ** float(spec.alpha_of(s)) * float(z0.get(s, 0.0))
                  for s in base.species])
    rates = base.rates(x, N)
    scale = np.array([float(N) ** -float(spec.alpha_of(s)) for s in base.species])
    flux = np.abs(base.stoichiometric_matrix() @ rates) * scale
    size = np.maximum(np.abs(x * scale), 1.0)
    r = float(np.max(flux / size)) if flux.size else 0.0
    return 10.0 / r if r > 0 else 10.0
