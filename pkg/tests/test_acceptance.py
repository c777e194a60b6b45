"""The ten acceptance criteria, each at its stated size and tolerance.

Every test records one PASS/FAIL line; the lines are collected again in a
section at the end of the pytest report.  Run just this file with

    python3 -m pytest tests/test_acceptance.py -v
"""

import math

import numpy as np
import pytest

from oracles import weight_partial_sum
from unbounded_gibbs import (CouplingField, DisorderLaw, Model, SpinConfig, WeightFunction,
                             build_measure, default_potential, exponents, young_bound)
from unbounded_gibbs.bounds import (check_one_point, check_uniform_moment, check_volume_bound,
                                    required_lambda)
from unbounded_gibbs.gibbs import (dlr_check, energy_bound_check, log_partition, mcmc_kernel,
                                   moment_observables, separating_family, tensor_expectations,
                                   transfer_log_partition_with)
from unbounded_gibbs.lattice import Region, RegionSequence, make_chain
from unbounded_gibbs.thermo import (empirical_metastate, gks_interpolation, quenched_pressure_trace,
                                    state_independence_check, superadditivity_check)

pytestmark = pytest.mark.acceptance

SEED = 20240601
LAW = DisorderLaw(0.5, 2.0)


def sextic_model(d: int, max_lambda: float, tol: float = 1e-12) -> Model:
    measure = build_measure(default_potential(), 4.0, max_lambda, tol)
    return Model(measure, exponents(2.0), WeightFunction(1.0, d))


def random_inputs(rng, region, j_range, xi_range):
    J = CouplingField({e: float(rng.uniform(-j_range, j_range)) for e in region.edge_keys()})
    xi = SpinConfig({y: float(rng.uniform(-xi_range, xi_range)) for y in region.boundary})
    return J, xi


def plaquette() -> Region:
    return Region.from_sites([(0, 0), (0, 1), (1, 0), (1, 1)])


def centred_chains(lengths):
    return [make_chain(L, -(L // 2)) for L in lengths]


def test_criterion_01_one_point_integrability(record):
    lam, kappa = 0.5, 0.25
    model = sextic_model(1, lam + 2 * kappa)
    rng = np.random.default_rng(SEED + 1)
    site = make_chain(1)
    reports = [check_one_point(model.spec(site, *random_inputs(rng, site, 3.0, 3.0)), lam, kappa)
               for _ in range(100)]
    margins = [r.details["log_rhs"] - r.details["log_lhs"] for r in reports]
    ok = all(r.passed for r in reports) and min(margins) >= -1e-8
    assert record(1, "one-point exponential moment", ok,
                  f"100/100 cases, min log-margin {min(margins):.4f}" if ok else
                  f"{sum(not r.passed for r in reports)} failures")


def test_criterion_02_volume_bound(record):
    lam, N = 0.1, 50.0
    rng = np.random.default_rng(SEED + 2)
    regions = [(plaquette(), 2)] + [(make_chain(L), 1) for L in (1, 2, 3, 4)]
    worst, failures, total = math.inf, 0, 0
    for region, d in regions:
        # 64-node grid: the discrete law is itself admissible, so the bound is exact on it
        model = sextic_model(d, required_lambda(lam, WeightFunction(1.0, d)), tol=1e-8)
        for _ in range(50):
            rep = check_volume_bound(model.spec(region, *random_inputs(rng, region, 3.0, 3.0)), lam, N)
            total += 1
            failures += not rep.passed
            worst = min(worst, rep.details["log_rhs"] - math.log(rep.lhs))
    ok = failures == 0
    assert record(2, "volume bound with truncation", ok,
                  f"{total - failures}/{total} cases (2x2 box, chains 1-4), min log-margin {worst:.2f}")


def test_criterion_03_dlr_consistency(record):
    rng = np.random.default_rng(SEED + 3)
    cases = [(make_chain(3), Region.from_sites([(1,)]), sextic_model(1, 0.0)),
             (plaquette(), Region.from_sites([(0, 0)]), sextic_model(2, 0.0, tol=1e-8))]
    worst = 0.0
    for outer, inner, model in cases:
        obs = moment_observables(outer) + separating_family(outer.sites)
        for _ in range(20):
            spec = model.spec(outer, *random_inputs(rng, outer, 2.0, 2.0))
            worst = max(worst, dlr_check(spec, inner, obs))
    ok = worst <= 1e-8
    assert record(3, "DLR consistency", ok, f"40 cases, max discrepancy {worst:.2e} (tol 1e-8)")


def test_criterion_04_engine_equivalence(record):
    model = sextic_model(1, 0.0)
    rng = np.random.default_rng(SEED + 4)
    chain = make_chain(3)
    obs = moment_observables(chain)
    worst = 0.0
    for _ in range(20):
        spec = model.spec(chain, *random_inputs(rng, chain, 2.0, 2.0))
        lz_q, v_q = tensor_expectations(spec, obs)
        lz_t, v_t = transfer_log_partition_with(spec, obs)
        worst = max(worst, abs(lz_q - lz_t), float(np.max(np.abs(v_q - v_t))))
    pair = make_chain(2)
    pair_obs = moment_observables(pair)
    z_scores = []
    for case in range(3):
        spec = model.spec(pair, *random_inputs(rng, pair, 1.0, 1.0))
        exact = tensor_expectations(spec, pair_obs)[1]
        for est, v in zip(mcmc_kernel(spec, pair_obs, 100_000, seed=SEED + case), exact):
            z_scores.append(abs(est.value - v) / est.std_error)
    ok = worst <= 1e-10 and max(z_scores) <= 3
    assert record(4, "engine equivalence", ok,
                  f"transfer vs quadrature max dev {worst:.1e}; MCMC max |z| {max(z_scores):.2f} "
                  f"over {len(z_scores)} moments")


def test_criterion_05_gks_interpolation(record):
    model = sextic_model(1, 0.0)
    curve = gks_interpolation(make_chain(4), ((1,), (2,)), model, LAW, 500,
                              np.linspace(0, 1, 11), seed=SEED + 5, antithetic=True)
    checks = curve.passes()
    fd0, err0 = curve.derivative_at_zero
    inc, inc_err = curve.increase
    ok = all(checks.values())
    assert record(5, "GKS interpolation", ok,
                  f"P'(0) = {fd0:.1e} +- {err0:.1e}; min P'' = {curve.second_diffs.min():.4f}; "
                  f"P(1)-P(0) = {inc:.4f} +- {inc_err:.4f}; {checks}")


def test_criterion_06_superadditivity_and_pressure(record):
    model = sextic_model(1, 2.0)
    rep = superadditivity_check(make_chain(2), make_chain(2, 2), make_chain(4), model, LAW, 500,
                                seed=SEED + 6)
    series = quenched_pressure_trace([make_chain(L) for L in range(3, 22, 2)], model, LAW, 500,
                                     seed=SEED + 6)
    diffs, _ = series.differences()
    ok = rep.passed and series.is_non_decreasing() and series.differences_shrinking()
    assert record(6, "superadditivity and quenched pressure", ok,
                  f"gain {rep.details['gain_mean']:.4f} +- {rep.details['gain_se']:.4f}; "
                  f"pressures {series.values[0]:.4f} .. {series.values[-1]:.4f}, "
                  f"differences {diffs[0]:.1e} .. {diffs[-1]:.1e}")


def test_criterion_07_state_independence(record):
    model = sextic_model(1, required_lambda(1.0, WeightFunction(1.0, 1)))
    lengths = [3, 5, 9, 17, 33]
    sequence = RegionSequence(tuple(centred_chains(lengths)), "van_hove")
    xi = SpinConfig({(y,): math.exp(-abs(y)) for y in range(-20, 21)})
    rep = state_independence_check(sequence, model, LAW, xi, 200, seed=SEED + 7)
    lhs, rhs = rep.details["lhs"], rep.details["rhs"]
    assert record(7, "boundary-condition independence", rep.passed,
                  f"lhs {lhs[0]:.2e} -> {lhs[-1]:.2e}, rhs {rhs[0]:.1f} -> {rhs[-1]:.2f}, "
                  f"within={rep.details['within']}, decreasing={rep.details['decreasing']}")


def test_criterion_08_uniform_moment(record):
    model = sextic_model(1, required_lambda(1.0, WeightFunction(1.0, 1)))
    rep = check_uniform_moment(LAW, model, centred_chains([3, 5, 7, 9]), (0,), 500, seed=SEED + 8)
    d = rep.details
    flat = abs(d["slope"]) <= 3 * d["slope_se"]
    ok = flat and rep.passed and d["all_below"]
    assert record(8, "uniform fourth moment", ok,
                  f"means {np.round(d['means'], 4).tolist()}, slope {d['slope']:.1e} +- "
                  f"{d['slope_se']:.1e}, c_nu {d['c_nu']:.2f}")


def test_criterion_09_cesaro_metastate(record):
    model = sextic_model(1, 0.0)
    lengths = list(range(3, 42, 2))
    xi = SpinConfig({(y,): 1.0 for y in range(-25, 26)})
    obs = separating_family([(0,), (1,)], [((0,), (1,))])
    summary = empirical_metastate(centred_chains(lengths), model, LAW, 100, obs, xi, seed=SEED + 9)
    exact = all(np.all(t.increments() <= t.increment_bounds() * (1 + 1e-12)) for t in summary.traces)
    disp = summary.dispersion
    monotone = bool(np.all(np.diff(disp[5:]) <= 0))
    assert record(9, "Cesaro increments and metastate dispersion", exact and monotone,
                  f"increment bound exact in 100/100 traces={exact}; dispersion "
                  f"{disp[5]:.2e} -> {disp[-1]:.2e}, non-increasing beyond index 5={monotone}")


def test_criterion_10_algebraic_suites(record):
    rng = np.random.default_rng(SEED + 10)
    # Young's inequality over a million tuples spanning many orders of magnitude
    n = 1_000_000
    a, b, c, kappa = (np.exp(rng.uniform(-5, 3, n)) for _ in range(4))
    lhs, rhs = young_bound(a, b, c, kappa, 4.0)
    young_ok = bool(np.all(lhs <= rhs * (1 + 1e-12)))

    # energy bound over 1e5 independent (sigma, xi, J) on the 2x2 box
    model = sextic_model(2, 0.0, tol=1e-8)
    box = plaquette()
    energy_ok = True
    for _ in range(100_000):
        scale = float(np.exp(rng.uniform(-3, 3)))
        spec = model.spec(box, *random_inputs(rng, box, scale, scale))
        e_lhs, e_rhs = energy_bound_check(spec, rng.uniform(-scale, scale, 4))
        energy_ok &= e_lhs <= e_rhs * (1 + 1e-12)

    # neighbour weight ratio and the closed forms of |w| and w0
    weight_ok = True
    for d, alpha in ((1, 1.0), (2, 1.0), (3, 0.5)):
        w = WeightFunction(alpha, d)
        x = rng.integers(-30, 31, size=(n // 3, d))
        y = x.copy()
        y[np.arange(len(x)), rng.integers(0, d, len(x))] += rng.choice([-1, 1], len(x))
        weight_ok &= bool(np.all(w(x) <= w.w0 * w(y) * (1 + 1e-12)))
        weight_ok &= w.w0 == math.exp(alpha)
        if d <= 2:
            radius = math.ceil(32 / alpha)
            weight_ok &= math.isclose(weight_partial_sum(alpha, d, radius), w.total_mass, rel_tol=1e-12)

    # gauge symmetry of log Z under J -> -J with zero boundary condition
    gauge_dev = 0.0
    m1, m2 = sextic_model(1, 0.0), model
    for region, mdl, engine in ((make_chain(5), m1, "transfer"), (make_chain(3), m1, "quadrature"),
                                (box, m2, "quadrature")):
        for _ in range(5):
            J, _ = random_inputs(rng, region, 3.0, 0.0)
            gauge_dev = max(gauge_dev, abs(log_partition(mdl.spec(region, J), engine)
                                           - log_partition(mdl.spec(region, -J), engine)))
    gauge_ok = gauge_dev <= 1e-10
    ok = young_ok and energy_ok and weight_ok and gauge_ok
    assert record(10, "algebraic property suites", ok,
                  f"Young={young_ok}, energy bound={energy_ok}, weights={weight_ok}, "
                  f"gauge max |dlogZ|={gauge_dev:.1e}")
