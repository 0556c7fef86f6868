"""Bundled example networks with default initial states and horizons."""

from __future__ import annotations

from dataclasses import dataclass
from importlib import resources

from .network import ReactionNetwork, ScalingSpec, parse_network


@dataclass(frozen=True)
class Scenario:
    name: str
    filename: str
    initial: dict        # rescaled initial state z(0) of non-intermediates
    T: float
    N: float
    description: str


SCENARIOS = {
    s.name: s for s in (
        Scenario("mm", "mm.rxn", {"E": 1.0, "S": 1.0}, 5.0, 100.0,
                 "enzyme E binds substrate S into ES, which releases product P"),
        Scenario("example2", "example2.rxn", {"E": 1.0, "S": 1.0}, 5.0, 100.0,
                 "two intermediates H1, H2 exchanging at very different rates"),
        Scenario("example4", "example4.rxn", {"S": 1.0}, 5.0, 100.0,
                 "branching intermediates with a slow second branch"),
        Scenario("sec9-1", "sec9-1.rxn", {"A": 2.0}, 50.0, 100.0,
                 "cubic birth-death system started on its unstable equilibrium"),
        Scenario("sec9-2", "sec9-2.rxn", {"A": 0.0, "B": 0.0}, 10.0, 1000.0,
                 "one intermediate feeding a fast and a slower product"),
        Scenario("empty-intermediates", "empty-intermediates.rxn", {"A": 1.0, "B": 1.0},
                 5.0, 10.0, "binding equilibrium without intermediates"),
    )
}


def scenario_text(name: str) -> str:
    if name not in SCENARIOS:
        raise KeyError(f"unknown scenario {name!r}; choose from {sorted(SCENARIOS)}")
    return resources.files("crnreduce.data").joinpath(SCENARIOS[name].filename).read_text("utf-8")


def load_scenario(name: str) -> tuple[ReactionNetwork, ScalingSpec, Scenario]:
    net, spec = parse_network(scenario_text(name))
    return net, spec, SCENARIOS[name]
