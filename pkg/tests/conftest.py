"""Shared fixtures: bundled scenarios and a seeded corpus of random networks."""

from __future__ import annotations

import numpy as np
import pytest

from crnreduce.intermediates import IntermediateError, validate_intermediates
from crnreduce.network import build_network
from crnreduce.scenarios import load_scenario

CORPUS_SIZE = 220
CORPUS_N = (1.0, 10.0, 1e3)


def random_network(rng: np.random.Generator):
    """Random network with 1-5 intermediates, each on a path from a complex to a complex.

    Returns ``(net, dec)`` or ``None`` if the draw is not a valid decomposition.
    """
    n_plain = int(rng.integers(1, 4))
    n_inter = int(rng.integers(1, 6))
    plain = [f"X{k}" for k in range(n_plain)]
    inter = [f"H{k}" for k in range(n_inter)]
    species = plain + inter

    def complex_():
        c = {}
        for s in plain:
            v = int(rng.integers(0, 3))
            if v and rng.random() < 0.6:
                c[s] = v
        return c

    pool = [complex_() for _ in range(int(rng.integers(2, 5)))]
    rx = []

    def rate():
        return float(rng.uniform(0.5, 2.0)), int(rng.integers(-1, 2))

    # each H_l is fed from a complex or from an earlier intermediate
    for l, h in enumerate(inter):
        if l == 0 or rng.random() < 0.5:
            rx.append((pool[int(rng.integers(len(pool)))], {h: 1}, *rate()))
        else:
            rx.append(({inter[int(rng.integers(l))]: 1}, {h: 1}, *rate()))
        # and drains into a complex, possibly via extra exits
        for _ in range(int(rng.integers(1, 3))):
            rx.append(({h: 1}, pool[int(rng.integers(len(pool)))], *rate()))
    for l, h in enumerate(inter):
        for m, g in enumerate(inter):
            if l != m and rng.random() < 0.3:
                rx.append(({h: 1}, {g: 1}, *rate()))
    # direct reactions among the non-intermediate complexes
    for _ in range(int(rng.integers(0, 3))):
        a, b = rng.choice(len(pool), 2, replace=False)
        if pool[a] != pool[b]:
            rx.append((pool[a], pool[b], *rate()))
    seen, uniq = set(), []
    for src, tgt, k, e in rx:
        key = (tuple(sorted(src.items())), tuple(sorted(tgt.items())))
        if src == tgt or key in seen:
            continue
        seen.add(key)
        uniq.append((src, tgt, k, e))
    net = build_network(species, uniq, intermediates=inter)
    try:
        dec = validate_intermediates(net)
    except IntermediateError:
        return None
    return net, dec


def make_corpus(seed: int = 20240601, size: int = CORPUS_SIZE):
    """``size`` valid random networks, each with a random positive state."""
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < size:
        drawn = random_network(rng)
        if drawn is None:
            continue
        net, dec = drawn
        x = np.zeros(net.n_species)
        x[list(dec.non_intermediates)] = rng.uniform(0.2, 3.0, len(dec.non_intermediates))
        out.append((net, dec, x))
    return out


@pytest.fixture(scope="session")
def corpus():
    return make_corpus()


@pytest.fixture(scope="session")
def scenario():
    cache = {}

    def get(name):
        if name not in cache:
            net, spec, scen = load_scenario(name)
            cache[name] = (net, validate_intermediates(net), spec, scen)
        return cache[name]

    return get


# -- acceptance reporting ------------------------------------------------------------------

_CRITERIA: dict[int, tuple[str, str, str]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or rep.when != "call" and not rep.failed:
        return
    number, title = mark.args
    status = "PASS" if rep.passed else "FAIL"
    detail = ""
    if rep.failed and call.excinfo is not None:
        detail = str(call.excinfo.value).splitlines()[0][:100] if str(call.excinfo.value) else \
            call.excinfo.typename
    # a failure in any phase sticks
    if _CRITERIA.get(number, ("", "PASS"))[1] != "FAIL":
        _CRITERIA[number] = (title, status, detail)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        title, status, detail = _CRITERIA[number]
        line = f"criterion {number:2d}  {status}  {title}"
        tr.write_line(line + (f"  ({detail})" if detail else ""))
    passed = sum(v[1] == "PASS" for v in _CRITERIA.values())
    tr.write_line(f"{passed}/{len(_CRITERIA)} criteria passed")
