"""Multiscale mass-action reaction networks and their text format.

A network is an ordered species list, complexes given as non-negative
integer vectors over the species, and reactions ``source -> target``
carrying a rate law ``kappa * N**eta``.  ``kappa`` is a positive sympy
expression: a number, a named parameter (``k1``) or, for reduced
networks, a positive rational function of ``N``.

File format (``#`` starts a comment)::

    species: E S ES P
    intermediates: ES
    alpha:
      S = 1/2
    parameters:
      k1 = 1.0
    reactions:
      E + S -> ES @ k1 N^0
      ES -> E + S @ k2 N^2
      ES -> E + P @ k3 N^1
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping

import numpy as np
import sympy as sp
from sympy.parsing.sympy_parser import (convert_xor, parse_expr,
                                        standard_transformations)

from .tropical import N, RationalN, as_fraction, rational_from_expr


class NetworkError(ValueError):
    """Invalid network structure or network file."""


class DSLSyntaxError(NetworkError):
    def __init__(self, message: str, lineno: int | None = None):
        self.lineno = lineno
        where = f"line {lineno}: " if lineno is not None else ""
        super().__init__(where + message)


class MissingParameterError(NetworkError):
    pass


@dataclass(frozen=True)
class Species:
    index: int
    name: str


@dataclass(frozen=True, order=True)
class Complex:
    """Stoichiometric vector over the network's species (dense)."""

    coeffs: tuple[int, ...]

    def __post_init__(self):
        if any(c < 0 for c in self.coeffs):
            raise NetworkError(f"negative stoichiometric coefficient in {self.coeffs}")

    @classmethod
    def from_mapping(cls, stoich: Mapping[int, int], n_species: int) -> "Complex":
        coeffs = [0] * n_species
        for k, c in stoich.items():
            coeffs[k] += int(c)
        return cls(tuple(coeffs))

    @classmethod
    def unit(cls, k: int, n_species: int) -> "Complex":
        return cls.from_mapping({k: 1}, n_species)

    @property
    def is_zero(self) -> bool:
        return not any(self.coeffs)

    @property
    def stoich(self) -> dict[int, int]:
        return {k: c for k, c in enumerate(self.coeffs) if c}

    def unit_species(self) -> int | None:
        """Species index if this complex is a single molecule of one species."""
        support = self.stoich
        if len(support) == 1:
            (k, c), = support.items()
            if c == 1:
                return k
        return None

    def project(self, keep: Iterable[int]) -> "Complex":
        return Complex(tuple(self.coeffs[k] for k in keep))

    def format(self, names: Iterable[str]) -> str:
        parts = []
        for c, name in zip(self.coeffs, names):
            if c == 1:
                parts.append(name)
            elif c:
                parts.append(f"{c} {name}")
        return " + ".join(parts) if parts else "0"

    def __len__(self) -> int:
        return len(self.coeffs)


@dataclass(frozen=True)
class RateLaw:
    kappa: sp.Expr
    eta: Fraction = Fraction(0)

    def __post_init__(self):
        object.__setattr__(self, "kappa", sp.sympify(self.kappa))
        object.__setattr__(self, "eta", as_fraction(self.eta))
        k = self.kappa
        if k.is_number and not k.is_positive:
            raise NetworkError(f"rate constant {k} must be positive")

    @property
    def constant(self) -> sp.Expr:
        """The full rate constant ``kappa * N**eta`` as a sympy expression."""
        if self.eta == 0:
            return self.kappa
        return self.kappa * N**sp.Rational(self.eta.numerator, self.eta.denominator)

    def scaled(self) -> RationalN:
        return rational_from_expr(self.constant)

    def value(self, n: float, params: Mapping[str, float] | None = None) -> float:
        k = self.kappa
        if k.is_number:
            base = float(k)
        else:
            subs = {N: n}
            for s in k.free_symbols:
                if s is N or s == N:
                    continue
                if params is None or s.name not in params:
                    raise MissingParameterError(f"no value for parameter {s.name!r}")
                subs[s] = params[s.name]
            base = float(k.subs(subs))
        return base * float(n) ** float(self.eta)


@dataclass(frozen=True)
class Reaction:
    source: Complex
    target: Complex
    law: RateLaw

    def __post_init__(self):
        if self.source == self.target:
            raise NetworkError("reaction y -> y is not allowed")
        if len(self.source) != len(self.target):
            raise NetworkError("source and target have different species counts")

    def format(self, names) -> str:
        return f"{self.source.format(names)} -> {self.target.format(names)}"


def _complex_key(c: Complex):
    return (sum(c.coeffs), tuple(-x for x in c.coeffs))


@dataclass(frozen=True)
class ReactionNetwork:
    """Validated network; complexes and reactions are kept in canonical order."""

    species: tuple[str, ...]
    reactions: tuple[Reaction, ...]
    intermediates: tuple[str, ...] = ()
    parameters: Mapping[str, float] = field(default_factory=dict)
    complexes: tuple[Complex, ...] = field(default=(), compare=False)

    def __post_init__(self):
        species = tuple(self.species)
        if len(set(species)) != len(species):
            raise NetworkError("duplicate species names")
        for name in species:
            if not _NAME.fullmatch(name) or name == "N":
                raise NetworkError(f"invalid species name {name!r}")
        for h in self.intermediates:
            if h not in species:
                raise NetworkError(f"unknown intermediate species {h!r}")
        n = len(species)
        for r in self.reactions:
            if len(r.source) != n:
                raise NetworkError("complex length does not match species count")
        cx = sorted({c for r in self.reactions for c in (r.source, r.target)},
                    key=_complex_key)
        index = {c: i for i, c in enumerate(cx)}
        rx = sorted(self.reactions, key=lambda r: (index[r.source], index[r.target]))
        pairs = [(r.source, r.target) for r in rx]
        if len(set(pairs)) != len(pairs):
            raise NetworkError("duplicate reaction (same source and target)")
        object.__setattr__(self, "species", species)
        object.__setattr__(self, "intermediates", tuple(self.intermediates))
        object.__setattr__(self, "reactions", tuple(rx))
        object.__setattr__(self, "complexes", tuple(cx))
        object.__setattr__(self, "parameters", dict(self.parameters))

    # -- lookups -----------------------------------------------------------
    @property
    def n_species(self) -> int:
        return len(self.species)

    def species_index(self, name: str) -> int:
        try:
            return self.species.index(name)
        except ValueError:
            raise NetworkError(f"unknown species {name!r}") from None

    def species_ids(self) -> tuple[Species, ...]:
        return tuple(Species(i, s) for i, s in enumerate(self.species))

    def complex_index(self, c: Complex) -> int:
        return self.complexes.index(c)

    def format_complex(self, c: Complex) -> str:
        return c.format(self.species)

    def format_reaction(self, r: Reaction) -> str:
        return r.format(self.species)

    def reaction_label(self, index: int) -> str:
        return self.format_reaction(self.reactions[index])

    # -- numerics ------------------------------------------------------------
    def source_matrix(self) -> np.ndarray:
        """(reactions x species) matrix of source stoichiometries."""
        return np.array([r.source.coeffs for r in self.reactions],
                        dtype=np.int64).reshape(len(self.reactions), self.n_species)

    def stoichiometric_matrix(self) -> np.ndarray:
        """(species x reactions) matrix of net changes ``target - source``."""
        m = np.array([np.subtract(r.target.coeffs, r.source.coeffs)
                      for r in self.reactions], dtype=float)
        return m.reshape(len(self.reactions), self.n_species).T.copy()

    def rate_constants(self, n: float, params: Mapping[str, float] | None = None) -> np.ndarray:
        params = self.parameters if params is None else {**self.parameters, **params}
        return np.array([r.law.value(n, params) for r in self.reactions], dtype=float)

    def rates(self, x, n: float) -> np.ndarray:
        """Mass-action rates at state ``x``."""
        x = np.asarray(x, dtype=float)
        k = self.rate_constants(n)
        return k * np.prod(np.power(x[None, :], self.source_matrix()), axis=1)


@dataclass(frozen=True)
class ScalingSpec:
    """Abundance exponents (non-intermediates) and derived rate exponents."""

    alpha: Mapping[str, Fraction]
    betas: Mapping[int, Fraction] = field(default_factory=dict)

    def alpha_of(self, name: str) -> Fraction:
        return self.alpha.get(name, Fraction(0))

    def alpha_vector(self, names: Iterable[str]) -> np.ndarray:
        return np.array([float(self.alpha_of(s)) for s in names])

    def with_alpha(self, net: ReactionNetwork, **updates) -> "ScalingSpec":
        return make_scaling(net, {**self.alpha, **{k: as_fraction(v) for k, v in updates.items()}})


def leading_eta(law: RateLaw) -> Fraction:
    """Leading exponent of ``N`` in the rate constant."""
    return law.scaled().leading().exponent


def derive_beta(net: ReactionNetwork, alpha: Mapping[str, Fraction],
                intermediates: Iterable[str] | None = None) -> dict[int, Fraction]:
    """Exact rate exponents ``eta + <alpha, source>`` for reactions not consuming intermediates."""
    inter = set(net.intermediates if intermediates is None else intermediates)
    inter_idx = {net.species_index(h) for h in inter}
    out = {}
    for i, r in enumerate(net.reactions):
        if r.source.unit_species() in inter_idx:
            continue
        total = leading_eta(r.law)
        for k, c in r.source.stoich.items():
            name = net.species[k]
            if name not in alpha:
                raise NetworkError(f"missing alpha entry for species {name!r}")
            total += c * as_fraction(alpha[name])
        out[i] = total
    return out


def make_scaling(net: ReactionNetwork, alpha: Mapping[str, object] | None = None,
                 intermediates: Iterable[str] | None = None) -> ScalingSpec:
    inter = set(net.intermediates if intermediates is None else intermediates)
    alpha = {k: as_fraction(v) for k, v in (alpha or {}).items()}
    for name in alpha:
        if name not in net.species:
            raise NetworkError(f"unknown species {name!r} in alpha block")
        if name in inter:
            raise NetworkError(f"alpha given for intermediate {name!r}")
    full = {s: alpha.get(s, Fraction(0)) for s in net.species if s not in inter}
    return ScalingSpec(full, derive_beta(net, full, inter))


# -- text format -----------------------------------------------------------------

_NAME = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")
_HEADER = re.compile(r"^(species|intermediates|alpha|parameters|reactions)\s*:\s*(.*)$")
_TERM = re.compile(r"^(?:(\d+)\s*\*?\s*)?([A-Za-z_][A-Za-z0-9_]*)$")
_ETA = re.compile(r"\s+N\s*\^\s*\(?\s*([-+]?\s*\d+(?:\s*/\s*\d+)?)\s*\)?\s*$")
_EXPR_OK = re.compile(r"^[A-Za-z0-9_+\-*/^().\s]+$")
_TRANSFORMS = standard_transformations + (convert_xor,)


def parse_kappa(text: str, lineno: int | None = None) -> sp.Expr:
    text = text.strip()
    if not text:
        raise DSLSyntaxError("missing rate constant", lineno)
    if not _EXPR_OK.match(text):
        raise DSLSyntaxError(f"invalid rate constant {text!r}", lineno)
    try:
        value = sp.Float(float(text)) if "." in text or "e" in text.lower() else sp.Integer(int(text))
    except ValueError:
        pass
    else:
        if not value.is_positive:
            raise DSLSyntaxError(f"rate constant {text!r} must be positive", lineno)
        return value
    names = set(re.findall(r"(?<![0-9.])[A-Za-z_][A-Za-z0-9_]*", text))
    local = {name: sp.Symbol(name, positive=True) for name in names if name != "N"}
    local["N"] = N
    try:
        expr = parse_expr(text, local_dict=local, transformations=_TRANSFORMS)
    except Exception as exc:  # sympy raises a variety of types here
        raise DSLSyntaxError(f"cannot parse rate constant {text!r}: {exc}", lineno) from None
    if expr.is_number and not expr.is_positive:
        raise DSLSyntaxError(f"rate constant {text!r} must be positive", lineno)
    return expr


def _parse_complex(text: str, index: Mapping[str, int], lineno: int) -> Complex:
    text = text.strip()
    if text in ("0", "∅", ""):
        if not text:
            raise DSLSyntaxError("empty complex (write 0 for the zero complex)", lineno)
        return Complex((0,) * len(index))
    stoich: dict[int, int] = {}
    for term in text.split("+"):
        term = term.strip()
        if term.startswith("-"):
            raise DSLSyntaxError(f"negative coefficient in {term!r}", lineno)
        m = _TERM.match(term)
        if not m:
            raise DSLSyntaxError(f"cannot parse complex term {term!r}", lineno)
        coef = int(m.group(1)) if m.group(1) else 1
        if coef <= 0:
            raise DSLSyntaxError(f"coefficient must be positive in {term!r}", lineno)
        name = m.group(2)
        if name not in index:
            raise DSLSyntaxError(f"unknown species {name!r}", lineno)
        stoich[index[name]] = stoich.get(index[name], 0) + coef
    return Complex.from_mapping(stoich, len(index))


def _parse_assignment(text: str, lineno: int) -> tuple[str, str]:
    if "=" not in text:
        raise DSLSyntaxError(f"expected 'name = value', got {text!r}", lineno)
    name, value = (s.strip() for s in text.split("=", 1))
    if not _NAME.fullmatch(name):
        raise DSLSyntaxError(f"invalid name {name!r}", lineno)
    return name, value


def parse_network(text: str) -> tuple[ReactionNetwork, ScalingSpec]:
    """Parse the network file format; alpha defaults to 0 for omitted species."""
    blocks: dict[str, list[tuple[int, str]]] = {}
    current = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        m = _HEADER.match(line)
        if m:
            current = m.group(1)
            if current in blocks:
                raise DSLSyntaxError(f"duplicate block {current!r}", lineno)
            blocks[current] = []
            if m.group(2).strip():
                blocks[current].append((lineno, m.group(2).strip()))
            continue
        if current is None:
            raise DSLSyntaxError(f"content outside of a block: {line!r}", lineno)
        blocks[current].append((lineno, line))

    if "species" not in blocks:
        raise DSLSyntaxError("missing 'species:' block")
    species: list[str] = []
    for lineno, line in blocks["species"]:
        for name in re.split(r"[\s,]+", line):
            if not name:
                continue
            if not _NAME.fullmatch(name) or name == "N":
                raise DSLSyntaxError(f"invalid species name {name!r}", lineno)
            if name in species:
                raise DSLSyntaxError(f"duplicate species {name!r}", lineno)
            species.append(name)
    index = {s: i for i, s in enumerate(species)}

    intermediates: list[str] = []
    for lineno, line in blocks.get("intermediates", []):
        for name in re.split(r"[\s,]+", line):
            if not name:
                continue
            if name not in index:
                raise DSLSyntaxError(f"unknown intermediate species {name!r}", lineno)
            if name not in intermediates:
                intermediates.append(name)

    alpha: dict[str, Fraction] = {}
    for lineno, line in blocks.get("alpha", []):
        for item in filter(None, (s.strip() for s in line.split(","))):
            name, value = _parse_assignment(item, lineno)
            if name not in index:
                raise DSLSyntaxError(f"unknown species {name!r} in alpha block", lineno)
            if name in intermediates:
                raise DSLSyntaxError(f"alpha given for intermediate {name!r}", lineno)
            try:
                alpha[name] = Fraction(value.replace(" ", ""))
            except (ValueError, ZeroDivisionError):
                raise DSLSyntaxError(f"invalid exponent {value!r}", lineno) from None

    params: dict[str, float] = {}
    for lineno, line in blocks.get("parameters", []):
        for item in filter(None, (s.strip() for s in line.split(","))):
            name, value = _parse_assignment(item, lineno)
            try:
                v = float(value)
            except ValueError:
                raise DSLSyntaxError(f"invalid parameter value {value!r}", lineno) from None
            if not v > 0:
                raise DSLSyntaxError(f"parameter {name!r} must be positive", lineno)
            params[name] = v

    reactions: list[Reaction] = []
    seen = set()
    for lineno, line in blocks.get("reactions", []):
        if "->" not in line:
            raise DSLSyntaxError(f"expected 'source -> target @ rate', got {line!r}", lineno)
        lhs, rest = line.split("->", 1)
        if "@" not in rest:
            raise DSLSyntaxError("missing '@ rate' in reaction", lineno)
        rhs, rate = rest.split("@", 1)
        source = _parse_complex(lhs, index, lineno)
        target = _parse_complex(rhs, index, lineno)
        if source == target:
            raise DSLSyntaxError("reaction y -> y is not allowed", lineno)
        if (source, target) in seen:
            raise DSLSyntaxError("duplicate reaction", lineno)
        seen.add((source, target))
        eta = Fraction(0)
        m = _ETA.search(" " + rate)
        if m:
            eta = Fraction(m.group(1).replace(" ", ""))
            rate = (" " + rate)[:m.start()]
        reactions.append(Reaction(source, target, RateLaw(parse_kappa(rate, lineno), eta)))
    if not reactions:
        raise DSLSyntaxError("no reactions")

    net = ReactionNetwork(tuple(species), tuple(reactions), tuple(intermediates), params)
    return net, make_scaling(net, alpha)


def format_kappa(kappa: sp.Expr) -> str:
    if kappa.is_Float:
        return repr(float(kappa))
    if kappa.is_Integer or kappa.is_Symbol:
        return str(kappa)
    return sp.sstr(kappa, full_prec=False)


def format_rate(law: RateLaw) -> str:
    return f"{format_kappa(law.kappa)} N^{law.eta}"


def _natural_key(name: str):
    return [int(t) if t.isdigit() else t for t in re.split(r"(\d+)", name)]


def serialize_network(net: ReactionNetwork, spec: ScalingSpec | None = None) -> str:
    """Canonical text form; ``parse_network`` reproduces the same network."""
    lines = [f"species: {' '.join(net.species)}"]
    if net.intermediates:
        lines.append(f"intermediates: {' '.join(net.intermediates)}")
    if spec is not None:
        nonzero = [(s, spec.alpha[s]) for s in net.species
                   if s in spec.alpha and spec.alpha[s] != 0]
        if nonzero:
            lines.append("alpha:")
            lines += [f"  {s} = {a}" for s, a in nonzero]
    if net.parameters:
        lines.append("parameters:")
        lines += [f"  {k} = {net.parameters[k]!r}"
                  for k in sorted(net.parameters, key=_natural_key)]
    lines.append("reactions:")
    for r in net.reactions:
        lines.append(f"  {net.format_reaction(r)} @ {format_rate(r.law)}")
    return "\n".join(lines) + "\n"


def build_network(species: Iterable[str], reactions: Iterable[tuple], *,
                  intermediates: Iterable[str] = (),
                  parameters: Mapping[str, float] | None = None) -> ReactionNetwork:
    """Build a network from ``(source, target, kappa, eta)`` tuples.

    ``source``/``target`` are dicts ``{name: coefficient}``; ``kappa`` is a
    number, a parameter name, or a sympy expression.
    """
    species = tuple(species)
    index = {s: i for i, s in enumerate(species)}

    def cx(d):
        return Complex.from_mapping({index[k]: v for k, v in (d or {}).items()}, len(species))

    rx = []
    for item in reactions:
        src, tgt, kappa = item[:3]
        eta = item[3] if len(item) > 3 else 0
        if isinstance(kappa, str):
            kappa = parse_kappa(kappa)
        elif isinstance(kappa, float):
            kappa = sp.Float(kappa)
        rx.append(Reaction(cx(src), cx(tgt), RateLaw(kappa, eta)))
    return ReactionNetwork(species, tuple(rx), tuple(intermediates), dict(parameters or {}))
