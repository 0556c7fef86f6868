from fractions import Fraction

import numpy as np
import pytest

from crnreduce import simulate as S
from crnreduce.intermediates import validate_intermediates
from crnreduce.network import build_network, make_scaling
from crnreduce.reduction import build_limiting, reduce


def _non_intermediates(net):
    return [s for s in net.species if s not in net.intermediates]


class TestConfig:
    @pytest.mark.parametrize("kw", [{"T": 0.0}, {"T": 1.0, "rtol": 0.1}, {"T": 1.0, "atol": 0.0},
                                    {"T": 1.0, "N": -1.0}])
    def test_rejects(self, kw):
        with pytest.raises(ValueError):
            S.SimConfig(**kw)

    def test_times_grid(self):
        t = S.SimConfig(2.0, n_points=5).times
        np.testing.assert_allclose(t, [0, 0.5, 1.0, 1.5, 2.0])

    def test_nonzero_intermediate_rejected(self, scenario):
        net, dec, spec, _ = scenario("mm")
        with pytest.raises(ValueError, match="zero initial intermediates"):
            S.simulate_full(net, dec, spec, S.SimConfig(1.0), {"E": 1, "S": 1, "ES": 0.1})

    def test_unknown_species(self, scenario):
        net, dec, spec, _ = scenario("mm")
        with pytest.raises(ValueError, match="unknown species"):
            S.simulate_full(net, dec, spec, S.SimConfig(1.0), {"Q": 1})


class TestFull:
    def test_zero_state_stays_zero(self, scenario):
        net, dec, spec, _ = scenario("mm")
        tr = S.simulate_full(net, dec, spec, S.SimConfig(3.0, 10.0), {})
        assert not tr.states.any()

    def test_mm_conservation(self, scenario):
        net, dec, spec, _ = scenario("mm")
        tr = S.simulate_full(net, dec, spec, S.SimConfig(5.0, 1e3), {"E": 1.0, "S": 1.0})
        total = tr.column("E") + tr.column("ES")
        np.testing.assert_allclose(total, 1.0, rtol=1e-8)

    def test_left_null_vectors_conserved(self, corpus):
        for net, dec, x in corpus[:25]:
            St = net.stoichiometric_matrix()
            u, s, vt = np.linalg.svd(St.T)
            null = vt[np.sum(s > 1e-10):] if St.shape[1] else np.eye(net.n_species)
            if not len(null):
                continue
            x0 = {sp: float(v) for sp, v in zip(net.species, x) if sp not in net.intermediates}
            tr = S.simulate_full(net, dec, None, S.SimConfig(1.0, 10.0, n_points=21), x0)
            w = tr.states @ null.T
            assert np.max(np.abs(w - w[0])) <= 1e-8 * max(1.0, np.abs(w[0]).max())

    def test_non_negative(self, corpus):
        for net, dec, x in corpus[:25]:
            x0 = {sp: float(v) for sp, v in zip(net.species, x) if sp not in net.intermediates}
            cfg = S.SimConfig(1.0, 1e3, n_points=21)
            tr = S.simulate_full(net, dec, None, cfg, x0)
            assert tr.states.min() >= -cfg.atol * 10

    def test_sec91_intermediate(self, scenario):
        net, dec, spec, _ = scenario("sec9-1")
        n = 100.0
        tr = S.simulate_full(net, dec, spec, S.SimConfig(5.0, n, 1e-10, 1e-14, 501), {"A": 2.0})
        want = 6 * (1 - np.exp(-n * tr.times)) / n
        mask = tr.times > 0
        np.testing.assert_allclose(tr.column("H")[mask], want[mask], rtol=1e-6)


class TestReducedAndLimiting:
    def test_cycle_reduced_bimolecular_decay(self, scenario):
        net, dec, spec, scen = scenario("example2")
        red = reduce(net, dec, spec)
        tr = S.simulate_reduced(red, spec, S.SimConfig(3.0, 10.0), scen.initial)
        # E is untouched, so S decays exponentially with rate k1 * E
        np.testing.assert_allclose(tr.column("S"), np.exp(-tr.times), rtol=1e-6)

    def test_empty_reduced_is_constant(self):
        sub = build_network(["A"], [], intermediates=[])
        red = reduce(sub, validate_intermediates(sub))
        tr = S.simulate_reduced(red, None, S.SimConfig(1.0, n_points=3), {"A": 4.0})
        np.testing.assert_array_equal(tr.states, 4.0)

    def test_sec91_limiting_equilibrium(self, scenario):
        net, dec, spec, _ = scenario("sec9-1")
        lim = build_limiting(reduce(net, dec, spec), spec)
        tr = S.simulate_limiting(lim, S.SimConfig(50.0), {"A": 2.0})
        assert np.max(np.abs(tr.column("A") - 2.0)) < 1e-6
        tr = S.simulate_limiting(lim, S.SimConfig(10.0), {"A": 2.1})
        assert tr.column("A")[-1] == pytest.approx(3.0, abs=1e-4)

    def test_mm_limiting_exponential(self):
        net = build_network(["E", "S", "ES", "P"],
                            [({"E": 1, "S": 1}, {"ES": 1}, "k1", 0),
                             ({"ES": 1}, {"E": 1, "S": 1}, "k2", 1),
                             ({"ES": 1}, {"E": 1, "P": 1}, "k3", 1)],
                            intermediates=["ES"], parameters={"k1": 2.0, "k2": 1.0, "k3": 3.0})
        dec = validate_intermediates(net)
        spec = make_scaling(net, {"S": 0, "P": 0})
        lim = build_limiting(reduce(net, dec, spec), spec)
        tr = S.simulate_limiting(lim, S.SimConfig(2.0), {"E": 0.5, "S": 1.0})
        rate = 2.0 * 3.0 * 0.5 / 4.0
        np.testing.assert_allclose(tr.column("S"), np.exp(-rate * tr.times), rtol=1e-6)

    def test_empty_limiting_constant(self, scenario):
        net, dec, spec, _ = scenario("mm")
        lim = build_limiting(reduce(net, dec, spec), spec)
        assert not lim.reactions
        tr = S.simulate_limiting(lim, S.SimConfig(1.0, n_points=4), {"E": 1.0, "S": 0.3})
        np.testing.assert_array_equal(tr.column("S"), 0.3)


class TestOracle:
    @pytest.mark.parametrize("name", ["mm", "example2", "example4"])
    @pytest.mark.parametrize("n", [10.0, 100.0])
    def test_agrees_with_full(self, scenario, name, n):
        net, dec, spec, scen = scenario(name)
        cfg = S.SimConfig(scen.T, n, 1e-8, 1e-12, 101)
        keep = _non_intermediates(net)
        full = S.simulate_full(net, dec, spec, cfg, scen.initial).select(keep)
        orc = S.simulate_delayed_oracle(net, dec, spec, cfg, scen.initial).select(keep)
        assert np.max(np.abs(full - orc)) < 1e-5

    def test_no_intermediates_is_full(self, scenario):
        net, dec, spec, scen = scenario("empty-intermediates")
        cfg = S.SimConfig(2.0, 3.0)
        np.testing.assert_array_equal(
            S.simulate_delayed_oracle(net, dec, spec, cfg, scen.initial).states,
            S.simulate_full(net, dec, spec, cfg, scen.initial).states)

    def test_history_cap(self, scenario):
        net, dec, spec, scen = scenario("mm")
        with pytest.raises(ValueError, match="cap"):
            S.simulate_delayed_oracle(net, dec, spec, S.SimConfig(1.0), scen.initial,
                                      step=1e-6, max_steps=1000)

    def test_phi_functions_scalar(self):
        a = -0.7
        E, P1, P2, P3 = (m[0, 0] for m in S.phi_functions(np.array([[a]])))
        assert E == pytest.approx(np.exp(a))
        assert P1 == pytest.approx((np.exp(a) - 1) / a)
        assert P2 == pytest.approx((np.exp(a) - 1 - a) / a**2)
        assert P3 == pytest.approx((np.exp(a) - 1 - a - a * a / 2) / a**3)


class TestSweep:
    def test_cycle_decreasing(self, scenario):
        net, dec, spec, scen = scenario("example2")
        res = S.convergence_sweep(net, dec, spec, S.SimConfig(5.0), scen.initial, (10, 100, 1000))
        assert res.strictly_decreasing
        errs = res.column("full_reduced")
        assert errs[-1] < 1e-2
        # at least 2x per decade
        assert all(b <= a / 2 for a, b in zip(errs, errs[1:]))

    def test_violated_requires_flag(self, scenario):
        net, dec, spec, scen = scenario("mm")
        s = spec.with_alpha(net, S=3)
        with pytest.raises(ValueError, match="require_assumptions"):
            S.convergence_sweep(net, dec, s, S.SimConfig(1.0), scen.initial, (10,))

    def test_no_intermediates_zero_error(self, scenario):
        net, dec, spec, scen = scenario("empty-intermediates")
        res = S.convergence_sweep(net, dec, spec, S.SimConfig(1.0), scen.initial, (5.0, 50.0))
        assert res.column("full_reduced") == [0.0, 0.0]

    def test_failed_cell_reported(self, scenario):
        net, dec, spec, scen = scenario("mm")
        res = S.convergence_sweep(net, dec, spec, S.SimConfig(1.0), {"E": 1.0, "ES": 1.0},
                                  (10.0,))
        assert res.rows[0].error and res.rows[0].full_reduced is None
        assert not res.strictly_decreasing

    def test_parallel_matches_serial(self, scenario):
        net, dec, spec, scen = scenario("mm")
        args = (net, dec, spec, S.SimConfig(2.0), scen.initial, (10.0, 100.0))
        assert S.convergence_sweep(*args, jobs=2) == S.convergence_sweep(*args)


class TestLongTerm:
    def test_sec91_probe(self, scenario):
        net, dec, spec, _ = scenario("sec9-1")
        r = S.long_term_probe(net, dec, spec)
        assert r["limiting_max_drift"] < 1e-6
        assert r["full_final"] <= 1 + 1e-3
        assert r["diverges"]
        assert r["full_exceeds_limiting"] <= 1e-8
        assert r["slow_manifold"]["intermediate_initial"] == pytest.approx([0.06])
        assert r["slow_manifold"]["intermediate_max_drift"] < 1e-8
        assert r["slow_manifold"]["full_reduced_sup"] < 1e-6

    def test_stable_point(self, scenario):
        net, dec, spec, _ = scenario("sec9-1")
        r = S.long_term_probe(net, dec, spec, z0=1.0)
        assert r["full_final"] == pytest.approx(1.0, abs=1e-3)
        assert r["limiting_final"] == pytest.approx(1.0, abs=1e-6)
        assert not r["diverges"]


def test_sec92_slopes(scenario):
    net, dec, spec, scen = scenario("sec9-2")
    n = 1e3
    cfg = S.SimConfig(scen.T, n)
    red = reduce(net, dec, spec)
    zr = S.simulate_reduced(red, spec, cfg, scen.initial)
    ours = S.growth_slope(zr.times, zr.column("A"))
    assert ours == pytest.approx(1.0 * 3.0 / 2.0, rel=0.02)
    full = S.simulate_full(net, dec, spec, cfg, scen.initial)
    assert S.growth_slope(full.times, full.column("A")) == pytest.approx(ours, rel=0.05)
    pruned = S.highest_rate_pruned(net, dec, n)
    assert [pruned.reaction_label(i) for i in range(len(pruned.reactions))] == ["0 -> H", "H -> B"]
    assert not S.simulate_full(pruned, None, spec, cfg, scen.initial).column("A").any()


def test_growth_slope_linear():
    t = np.linspace(0, 4, 41)
    assert S.growth_slope(t, 3 * t + 1) == pytest.approx(3.0)


def test_rescaled():
    tr = S.Trajectory(np.array([0.0]), np.array([[100.0, 5.0]]), ("A", "B"))
    net = build_network(["A", "B"], [({"A": 1}, {"B": 1}, 1)])
    out = tr.rescaled(make_scaling(net, {"A": 2, "B": Fraction(0)}), 10.0)
    np.testing.assert_allclose(out.states, [[1.0, 5.0]])


def test_default_horizon(scenario):
    net, dec, spec, scen = scenario("example2")
    red = reduce(net, dec, spec)
    # fastest rescaled rate is k1 * E * S = 1 at the initial state
    assert S.default_horizon(red, spec, scen.initial, 10.0) == pytest.approx(10.0)
