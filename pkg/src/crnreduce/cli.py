"""``crnreduce`` command line: reduce, check, check-intermediates, mu, simulate, sweep.

Reports go to stdout as JSON with sorted keys and fixed float formatting, so
identical invocations give identical bytes (unless ``--timing`` is passed).
Networks are written in the text format, trajectories as CSV.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import re
import sys
import time
from fractions import Fraction
from pathlib import Path

import numpy as np
import sympy as sp

from . import assumptions, linalg
from .intermediates import IntermediateError, detect_intermediates, validate_intermediates
from .network import (NetworkError, ReactionNetwork, ScalingSpec, make_scaling, parse_network,
                      serialize_network)
from .reduction import (LimitError, build_limiting, check_single_scale, limiting_report,
                        reduce, reduced_report, serialize_limiting, serialize_reduced)
from .scenarios import SCENARIOS, load_scenario, scenario_text
from .simulate import IntegrationError, SimConfig, compare, convergence_sweep, default_horizon
from .tropical import exponent_str

EXIT_OK, EXIT_INPUT, EXIT_VIOLATED, EXIT_UNKNOWN = 0, 1, 2, 3
FLOAT_DIGITS = 12


class InputError(Exception):
    pass


# -- report formatting ---------------------------------------------------------------------

def _clean(obj):
    """Make ``obj`` JSON-safe with a fixed number of significant digits."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (bool, type(None), str, int)) and not isinstance(obj, np.integer):
        return obj
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, Fraction):
        return exponent_str(obj)
    if isinstance(obj, sp.Basic):
        return sp.sstr(obj)
    x = float(obj)
    if not math.isfinite(x):
        return str(x)
    return float(f"{x:.{FLOAT_DIGITS}g}")


def dump_report(report: dict, stream=None) -> str:
    text = json.dumps(_clean(report), sort_keys=True, indent=2)
    print(text, file=stream or sys.stdout)
    return text


# -- argument handling ---------------------------------------------------------------------

_ALPHA_SHORT = re.compile(r"^--alpha([A-Za-z_][A-Za-z0-9_]*)$")


def _expand_alpha_short(argv):
    """Rewrite ``--alphaS 0`` and ``--alphaS=0`` into ``--alpha S=0``."""
    out = []
    it = iter(argv)
    for a in it:
        head, eq, tail = a.partition("=")
        m = _ALPHA_SHORT.match(head)
        if m:
            value = tail if eq else next(it, "")
            out += ["--alpha", f"{m.group(1)}={value}"]
        else:
            out.append(a)
    return out


def _assignment(text: str) -> tuple[str, str]:
    name, eq, value = text.partition("=")
    if not eq or not name.strip() or not value.strip():
        raise argparse.ArgumentTypeError(f"expected name=value, got {text!r}")
    return name.strip(), value.strip()


def _grid(text: str) -> list[float]:
    try:
        vals = [float(v) for v in text.replace(",", " ").split()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad grid {text!r}") from None
    if not vals or any(v <= 0 for v in vals):
        raise argparse.ArgumentTypeError("grid values must be positive")
    return vals


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    src = common.add_mutually_exclusive_group(required=True)
    src.add_argument("--network", help="network file in the text format")
    src.add_argument("--scenario", choices=sorted(SCENARIOS), help="bundled example")
    common.add_argument("--alpha", action="append", type=_assignment, default=[],
                        metavar="NAME=P/Q", help="abundance exponent override (repeatable)")
    common.add_argument("--param", action="append", type=_assignment, default=[],
                        metavar="NAME=VALUE", help="parameter value override (repeatable)")
    common.add_argument("--intermediates", help="comma-separated intermediates overriding the file")
    common.add_argument("--N", type=float, help="scale parameter")
    common.add_argument("--out-dir", default=None, help="directory for emitted files")
    common.add_argument("--timing", action="store_true", help="add wall-clock timing to the report")

    sim = argparse.ArgumentParser(add_help=False)
    sim.add_argument("--T", type=float, help="time horizon")
    sim.add_argument("--init", action="append", type=_assignment, default=[],
                     metavar="NAME=VALUE", help="rescaled initial value z(0) (repeatable)")
    sim.add_argument("--rtol", type=float, default=1e-8)
    sim.add_argument("--atol", type=float, default=1e-12)
    sim.add_argument("--points", type=int, default=201, help="output grid size")

    p = argparse.ArgumentParser(prog="crnreduce",
                                description="Reduce mass-action networks by eliminating intermediates.")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("reduce", parents=[common], help="reduced and limiting networks")
    sub.add_parser("check", parents=[common], help="fast-consumption condition verdict")
    sub.add_parser("check-intermediates", parents=[common],
                   help="validate (or detect with --detect) the intermediate set")
    sub.choices["check-intermediates"].add_argument("--detect", action="store_true")
    sub.add_parser("mu", parents=[common, sim], help="quasi-steady intermediate levels")
    sub.add_parser("simulate", parents=[common, sim], help="full vs reduced vs limiting")
    sw = sub.add_parser("sweep", parents=[common, sim], help="convergence sweep over N")
    sw.add_argument("--grid", type=_grid, default=[10.0, 100.0, 1000.0],
                    help="comma-separated N values")
    sw.add_argument("--jobs", type=int, default=1)
    sw.add_argument("--control", action="store_true",
                    help="run even when the fast-consumption condition is violated")
    return p


# -- loading -------------------------------------------------------------------------------

def _read_network(args):
    if args.scenario:
        net, spec, scen = load_scenario(args.scenario)
        return net, spec, scen, args.scenario
    path = Path(args.network)
    if path.is_file():
        text = path.read_text("utf-8")
    else:
        bundled = [s for s in SCENARIOS.values() if s.filename == path.name]
        if not bundled:
            raise InputError(f"network file not found: {args.network}")
        text = scenario_text(bundled[0].name)
    net, spec = parse_network(text)
    scen = next((s for s in SCENARIOS.values() if s.filename == path.name), None)
    return net, spec, scen, path.stem


def _load(args):
    net, spec, scen, stem = _read_network(args)
    if args.param:
        params = dict(net.parameters)
        params.update({k: float(v) for k, v in args.param})
        net = ReactionNetwork(net.species, net.reactions, net.intermediates, params)
    inter = net.intermediates
    if args.intermediates is not None:
        inter = tuple(h.strip() for h in args.intermediates.split(",") if h.strip())
        net = ReactionNetwork(net.species, net.reactions, inter, net.parameters)
    dec = validate_intermediates(net)
    alpha = {s: a for s, a in spec.alpha.items() if s not in inter}
    for name, value in args.alpha:
        try:
            alpha[name] = Fraction(value)
        except (ValueError, ZeroDivisionError):
            raise InputError(f"bad exponent {value!r} for {name!r}") from None
    spec = make_scaling(net, alpha)
    return net, dec, spec, scen, stem


def _network_summary(net, spec: ScalingSpec) -> dict:
    return {
        "species": list(net.species),
        "intermediates": list(net.intermediates),
        "reactions": [net.reaction_label(i) for i in range(len(net.reactions))],
        "alpha": {s: exponent_str(a) for s, a in spec.alpha.items()},
        "beta": {net.reaction_label(i): exponent_str(b) for i, b in sorted(spec.betas.items())},
    }


def _pick_N(args, scen, fallback=100.0) -> float:
    if args.N is not None:
        return args.N
    return scen.N if scen else fallback


def _initial(args, scen, species) -> dict:
    z0 = dict(scen.initial) if scen else {s: 1.0 for s in species}
    for name, value in args.init:
        if name not in species:
            raise InputError(f"--init names unknown non-intermediate species {name!r}")
        z0[name] = float(value)
    return z0


def _out_dir(args) -> Path | None:
    if args.out_dir is None:
        return None
    d = Path(args.out_dir)
    d.mkdir(parents=True, exist_ok=True)
    return d


# -- commands ------------------------------------------------------------------------------

def cmd_reduce(args) -> tuple[dict, int]:
    net, dec, spec, _, stem = _load(args)
    red = reduce(net, dec, spec)
    report = {"network": _network_summary(net, spec), "decomposition": dec.summary(),
              "reduced": reduced_report(red, spec)}
    reduced_text = serialize_reduced(red, spec)
    report["reduced"]["text"] = reduced_text
    single = check_single_scale(red, spec)
    report["single_scale"] = {"passed": single.passed, "violations": list(single.violations)}
    limiting_text = None
    if single.passed:
        try:
            lim = build_limiting(red, spec)
        except LimitError as exc:
            report["limiting"] = {"error": str(exc)}
        else:
            report["limiting"] = limiting_report(lim)
            limiting_text = serialize_limiting(lim)
            report["limiting"]["text"] = limiting_text
    else:
        report["limiting"] = {"error": "single-scale condition fails"}
    out = _out_dir(args)
    if out is not None:
        files = {"reduced": out / f"{stem}.reduced.rxn"}
        files["reduced"].write_text(reduced_text, encoding="utf-8")
        if limiting_text is not None:
            files["limiting"] = out / f"{stem}.limiting.rxn"
            files["limiting"].write_text(limiting_text, encoding="utf-8")
        report["files"] = {k: str(v) for k, v in files.items()}
    return report, EXIT_OK


def cmd_check(args) -> tuple[dict, int]:
    net, dec, spec, _, _ = _load(args)
    verdict = assumptions.check_all(dec, spec)
    report = {"network": _network_summary(net, spec), "decomposition": dec.summary(),
              "verdict": verdict.status, "evidence": verdict.evidence}
    return report, verdict.exit_code


def cmd_check_intermediates(args) -> tuple[dict, int]:
    if args.detect:
        net, spec, _, _ = _read_network(args)
        dec = detect_intermediates(net)
    else:
        net, dec, spec, _, _ = _load(args)
    report = {"valid": True, "decomposition": dec.summary(),
              "acyclic": bool(_acyclic(dec))}
    return report, EXIT_OK


def _acyclic(dec):
    from .intermediates import is_intermediate_acyclic
    return is_intermediate_acyclic(dec)


def cmd_mu(args) -> tuple[dict, int]:
    net, dec, spec, scen, _ = _load(args)
    N = _pick_N(args, scen)
    names = [net.species[k] for k in dec.non_intermediates]
    z0 = _initial(args, scen, names)
    xhat = {s: N ** float(spec.alpha_of(s)) * v for s, v in z0.items()}
    rows = {}
    for i in dec.U:
        label = net.format_complex(net.complexes[i])
        sym = linalg.symbolic_mu(dec, i)
        rows[label] = {
            "solve": list(linalg.mu_by_solve(dec, i, xhat, N)),
            "matrix_tree": (list(linalg.mu_by_matrix_tree(dec, i, xhat, N))
                            if len(dec.V) <= linalg.TREE_CAP else None),
            "numerators": [sp.sstr(e) for e in sym.numerator_exprs],
            "denominator": sp.sstr(sym.denominator_expr),
        }
    pi = linalg.splitting_probabilities(dec, N) if len(dec.V) else np.zeros((0, 0))
    products = [net.format_complex(net.complexes[j]) for j in dec.W]
    report = {"N": N, "state": xhat, "mu": rows,
              "splitting": {h: dict(zip(products, pi[l]))
                            for l, h in enumerate(dec.intermediate_names)}}
    return report, EXIT_OK


def _write_csv(path: Path, times, species, blocks) -> None:
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        header = ["t"] + [f"{tag}_{s}" for tag, arr in blocks if arr is not None for s in species]
        w.writerow(header)
        for n, t in enumerate(times):
            row = [t]
            for _, arr in blocks:
                if arr is not None:
                    row += list(arr[n])
            w.writerow([f"{v:.{FLOAT_DIGITS}g}" for v in row])


def cmd_simulate(args) -> tuple[dict, int]:
    net, dec, spec, scen, stem = _load(args)
    N = _pick_N(args, scen)
    red = reduce(net, dec, spec)
    names = list(red.species)
    z0 = _initial(args, scen, names)
    T = args.T or (scen.T if scen else default_horizon(red, spec, z0, N))
    cfg = SimConfig(T, N, args.rtol, args.atol, args.points)
    b = compare(net, dec, spec, cfg, z0, red=red)
    final = {"full": dict(zip(names, b.full[-1])), "reduced": dict(zip(names, b.reduced[-1]))}
    if b.limiting is not None:
        final["limiting"] = dict(zip(names, b.limiting[-1]))
    report = {"N": N, "T": T, "initial": z0, "final": final, "sup_errors": b.sup_errors,
              "limiting_available": b.limiting is not None}
    out = _out_dir(args)
    if out is not None:
        path = out / f"{stem}.N{N:g}.csv"
        _write_csv(path, b.times, names,
                   [("full", b.full), ("reduced", b.reduced), ("limiting", b.limiting)])
        report["files"] = {"trajectories": str(path)}
    return report, EXIT_OK


def cmd_sweep(args) -> tuple[dict, int]:
    net, dec, spec, scen, stem = _load(args)
    red = reduce(net, dec, spec)
    z0 = _initial(args, scen, list(red.species))
    T = args.T or (scen.T if scen else 5.0)
    cfg = SimConfig(T, 1.0, args.rtol, args.atol, args.points)
    try:
        res = convergence_sweep(net, dec, spec, cfg, z0, args.grid,
                                require_assumptions=not args.control, jobs=args.jobs)
    except ValueError as exc:
        if "violated" in str(exc):
            return {"error": str(exc), "verdict": assumptions.VIOLATED_NUMERIC}, EXIT_VIOLATED
        raise
    rows = [{"N": r.N, "full_reduced": r.full_reduced, "full_limiting": r.full_limiting,
             "error": r.error} for r in res.rows]
    report = {"T": T, "initial": z0, "verdict": res.verdict, "rows": rows,
              "strictly_decreasing": res.strictly_decreasing}
    out = _out_dir(args)
    if out is not None:
        path = out / f"{stem}.sweep.csv"
        with path.open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["N", "full_reduced", "full_limiting"])
            for r in res.rows:
                w.writerow([f"{r.N:g}"] + ["" if v is None else f"{v:.{FLOAT_DIGITS}g}"
                                            for v in (r.full_reduced, r.full_limiting)])
        report["files"] = {"sweep": str(path)}
    code = assumptions.EXIT_CODES.get(res.verdict, EXIT_UNKNOWN)
    if any(r.error for r in res.rows):
        code = max(code, EXIT_UNKNOWN)
    return report, code


COMMANDS = {"reduce": cmd_reduce, "check": cmd_check,
            "check-intermediates": cmd_check_intermediates, "mu": cmd_mu,
            "simulate": cmd_simulate, "sweep": cmd_sweep}


def main(argv=None) -> int:
    argv = _expand_alpha_short(sys.argv[1:] if argv is None else list(argv))
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    start = time.perf_counter()
    try:
        report, code = COMMANDS[args.command](args)
    except (InputError, NetworkError, IntermediateError, FileNotFoundError, KeyError,
            ValueError, IntegrationError, np.linalg.LinAlgError, linalg.ExpmOverflowError) as exc:
        print(f"crnreduce {args.command}: {exc}", file=sys.stderr)
        return EXIT_INPUT
    report["command"] = args.command
    if args.timing:
        report["timing"] = {"seconds": time.perf_counter() - start}
    dump_report(report)
    return code


if __name__ == "__main__":
    sys.exit(main())
