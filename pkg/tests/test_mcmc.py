import math

import numpy as np
import pytest

from unbounded_gibbs.gibbs import (SamplerWarning, batch_means, exact_kernel, log_partition,
                                   log_partition_estimate, mcmc_kernel, moment_observables,
                                   pair_product, run_chain, site_power, thermodynamic_integration)
from unbounded_gibbs.gibbs.mcmc import simpson_weights
from unbounded_gibbs.lattice import make_chain
from unbounded_gibbs.weights import CouplingField, SpinConfig


def test_same_seed_same_chain(model1):
    chain = make_chain(2)
    spec = model1.spec(chain, CouplingField.constant(chain, 0.7), SpinConfig({(-1,): 1.0}))
    a = mcmc_kernel(spec, moment_observables(chain), 5000, seed=12)
    b = mcmc_kernel(spec, moment_observables(chain), 5000, seed=12)
    assert [e.value for e in a] == [e.value for e in b]
    assert [e.std_error for e in a] == [e.std_error for e in b]
    assert np.array_equal(run_chain(spec, 300, 5).samples, run_chain(spec, 300, 5).samples)
    assert not np.array_equal(run_chain(spec, 300, 5).samples, run_chain(spec, 300, 6).samples)


def test_free_spin_second_moment(model1, measure):
    one = make_chain(1)
    spec = model1.spec(one, CouplingField.constant(one, 0.0))
    (est,) = mcmc_kernel(spec, [site_power((0,), 2)], 100_000, seed=1)
    assert abs(est.value - measure.moment(2)) <= 3 * est.std_error
    assert est.engine == "mcmc" and est.n_samples == 100_000


def test_pair_moments_against_quadrature(model1):
    rng = np.random.default_rng(77)
    two = make_chain(2)
    obs = moment_observables(two)
    J = CouplingField({e: float(rng.normal()) for e in two.edge_keys()})
    spec = model1.spec(two, J, SpinConfig({(-1,): 0.8, (2,): -0.4}))
    _, exact = exact_kernel(spec, obs)
    for m, e in zip(mcmc_kernel(spec, obs, 100_000, seed=3), exact):
        assert abs(m.value - e.value) <= 3 * m.std_error


def test_single_site_flows_are_balanced(model1):
    """Reversibility: transitions between any two bins happen equally often both ways."""
    one = make_chain(1)
    spec = model1.spec(one, CouplingField.constant(one, 1.0), SpinConfig({(-1,): 0.3, (1,): 0.2}))
    x = run_chain(spec, 400_000, seed=9).samples[:, 0]
    bins = np.digitize(x, [-0.4, 0.4])
    a, b = bins[:-1], bins[1:]
    for i in range(3):
        for j in range(i + 1, 3):
            forward = int(np.sum((a == i) & (b == j)))
            backward = int(np.sum((a == j) & (b == i)))
            assert forward > 100
            assert abs(forward - backward) <= 3 * math.sqrt(forward + backward)


def test_adaptation_reaches_target_acceptance(model1):
    chain = make_chain(3)
    spec = model1.spec(chain, CouplingField.constant(chain, 1.5), SpinConfig({(-1,): 2.0, (3,): -2.0}))
    res = run_chain(spec, 20_000, seed=2)
    assert not res.flagged
    assert np.all(np.abs(res.acceptance - 0.4) < 0.1)


def test_bad_acceptance_is_flagged(model1, monkeypatch):
    one = make_chain(1)
    spec = model1.spec(one, CouplingField.constant(one, 0.0))
    res = run_chain(spec, 2000, seed=0, burn_in=50, adapt_every=50, initial_step=200.0)
    assert res.flagged and res.acceptance[0] < 0.1
    from unbounded_gibbs.gibbs import mcmc
    monkeypatch.setattr(mcmc, "run_chain", lambda *a, **k: res)
    with pytest.warns(SamplerWarning, match="acceptance"):
        mcmc_kernel(spec, [site_power((0,), 2)], 2000, seed=0)


def test_batch_means_on_independent_data():
    rng = np.random.default_rng(0)
    x = rng.normal(size=100_000)
    mean, se = batch_means(x)
    assert mean == pytest.approx(x.mean())
    assert se == pytest.approx(1 / math.sqrt(len(x)), rel=0.3)


def test_simpson_weights_integrate_cubics_exactly():
    for n in (3, 5, 9):
        t = np.linspace(0, 1, n)
        w = simpson_weights(n)
        assert w @ t ** 3 == pytest.approx(0.25, rel=1e-14)
        assert w.sum() == pytest.approx(1.0, rel=1e-14)
    with pytest.raises(ValueError):
        simpson_weights(4)


def test_thermodynamic_integration_against_transfer(model1):
    rng = np.random.default_rng(5)
    chain = make_chain(3)
    J = CouplingField({e: float(rng.uniform(-1, 1)) for e in chain.edge_keys()})
    spec = model1.spec(chain, J, SpinConfig({(-1,): 0.5, (3,): -1.0}))
    res = thermodynamic_integration(spec, n_t=9, n_sweeps=20_000, seed=4)
    exact = log_partition(spec, "transfer")
    assert abs(res.estimate.value - exact) <= 3 * res.estimate.std_error
    assert res.coarse_value is not None
    est = log_partition_estimate(spec, "mcmc", n_t=9, n_sweeps=20_000, seed=4)
    assert est.value == res.estimate.value


def test_zero_couplings_give_zero_log_partition(model1):
    chain = make_chain(5)
    spec = model1.spec(chain, CouplingField.constant(chain, 0.0))
    for engine in ("transfer", "mcmc"):
        assert log_partition(spec, engine) == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(ValueError):
        log_partition(spec, "nonsense")


def test_engine_selection(model1, model2):
    from unbounded_gibbs.gibbs import choose_engine
    from unbounded_gibbs.lattice import make_box
    assert choose_engine(model1.spec(make_chain(6), CouplingField.constant(make_chain(6), 0))) == "transfer"
    sq = make_box((0, 0), (0, 0))
    assert choose_engine(model2.spec(sq, CouplingField.constant(sq, 0))) == "transfer"
    box = make_box((0, 0), (1, 1))
    assert choose_engine(model2.spec(box, CouplingField.constant(box, 0))) == "mcmc"
    assert pair_product((0,), (1,)).degree == 2
