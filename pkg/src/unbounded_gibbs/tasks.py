"""Task runners used by the batch CLI.

A task turns its parameter table into result tables (lists of CSV rows)
and a list of checks.  Each check is either deterministic (a bound that
must hold on the quadrature grid) or statistical (3 standard errors).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np

from . import bounds, thermo
from .config import RunConfig
from .disorder import DisorderLaw
from .gibbs import (GibbsEstimate, Model, SamplerWarning, bounded_site, dlr_check, mcmc_kernel,
                    moment_observables, separating_family, tensor_expectations,
                    transfer_log_partition_with)
from .lattice import Region, RegionSequence, make_chain
from .single_spin import Potential, build_measure
from .weights import CouplingField, SpinConfig, WeightFunction, exponents, norm_q


@dataclass
class Check:
    name: str
    passed: bool
    deterministic: bool
    detail: str = ""

    def __post_init__(self):
        self.passed = bool(self.passed)
        self.deterministic = bool(self.deterministic)


@dataclass
class TaskOutcome:
    tables: dict[str, list[dict]] = field(default_factory=dict)
    checks: list[Check] = field(default_factory=list)


@dataclass
class TaskContext:
    config: RunConfig
    index: int
    params: dict[str, Any]

    @property
    def seed(self) -> int:
        return int(self.config.disorder.master_seed)

    def rng(self) -> np.random.Generator:
        ss = np.random.SeedSequence(self.seed, spawn_key=(self.index,))
        return np.random.Generator(np.random.Philox(ss))

    def get(self, key: str, default=None):
        return self.params.get(key, default)

    @property
    def weight(self) -> WeightFunction:
        m = self.config.model
        return WeightFunction(float(m.alpha), int(m.d))

    def model(self, max_lambda: float = 0.0, tol: float | None = None) -> Model:
        mc, ec = self.config.model, self.config.engines
        q = float(mc.q)
        ex = exponents(q)
        measure = build_measure(Potential(tuple(mc.potential)), ex.p, max_lambda,
                                tol if tol is not None else float(self.get("tol", ec.quadrature_tol)),
                                order=ec.quadrature_order, max_panels=ec.max_panels)
        return Model(measure, ex, self.weight)

    @property
    def law(self) -> DisorderLaw:
        return DisorderLaw(float(self.get("scale", self.config.disorder.scale)), float(self.config.model.q))

    @property
    def n_realizations(self) -> int:
        return int(self.get("n_realizations", self.config.disorder.n_realizations))

    def region(self, key: str = "region", default: dict | None = None) -> Region:
        return parse_region(self.get(key, default or {"shape": "chain", "length": 3}), self.weight.d)


def parse_region(spec: dict, d: int) -> Region:
    """Region from a config table: chain, box (lengths + corner) or explicit sites."""
    shape = spec.get("shape", "chain")
    if shape == "chain":
        return make_chain(int(spec["length"]), int(spec.get("start", 0)), d, int(spec.get("axis", 0)))
    if shape == "box":
        lengths = [int(v) for v in spec["lengths"]]
        corner = [int(v) for v in spec.get("corner", [0] * len(lengths))]
        if len(lengths) != d or len(corner) != d:
            raise ValueError("box lengths and corner must have one entry per dimension")
        grids = np.meshgrid(*[np.arange(c, c + n) for c, n in zip(corner, lengths)], indexing="ij")
        return Region.from_sites(np.stack([g.ravel() for g in grids], axis=1).tolist())
    if shape == "sites":
        return Region.from_sites(spec["sites"])
    raise ValueError(f"unknown region shape {shape!r}")


def centred_chains(lengths, d: int = 1) -> list[Region]:
    return [make_chain(int(L), -(int(L) // 2), d) for L in lengths]


def _random_inputs(rng: np.random.Generator, region: Region, j_range: float, xi_range: float
                   ) -> tuple[CouplingField, SpinConfig]:
    J = CouplingField({e: float(rng.uniform(-j_range, j_range)) for e in region.edge_keys()})
    xi = SpinConfig({y: float(rng.uniform(-xi_range, xi_range)) for y in region.boundary})
    return J, xi


def _report_rows(task: str, reports) -> list[dict]:
    return [{"task": task, **r.row()} for r in reports]


def _bound_task(ctx: TaskContext, name: str, max_lambda: float,
                make: Callable[[Model, Region, CouplingField, SpinConfig], Any]) -> TaskOutcome:
    region = ctx.region()
    model = ctx.model(max_lambda)
    rng = ctx.rng()
    reports = []
    for _ in range(int(ctx.get("n_cases", 20))):
        J, xi = _random_inputs(rng, region, float(ctx.get("coupling_range", 2.0)),
                               float(ctx.get("boundary_range", 2.0)))
        reports.append(make(model, region, J, xi))
    ok = all(r.passed for r in reports)
    worst = min((r.margin for r in reports), default=math.inf)
    return TaskOutcome({name: _report_rows(name, reports)},
                       [Check(name, ok, True, f"{len(reports)} cases, min margin {worst:.6g}")])


def run_one_point(ctx: TaskContext) -> TaskOutcome:
    lam, kappa = float(ctx.get("lambda", 0.5)), float(ctx.get("kappa", 0.25))
    ctx.params.setdefault("region", {"shape": "chain", "length": 1})
    d = ctx.weight.d
    return _bound_task(ctx, "one_point", lam + 2 * d * kappa,
                       lambda m, reg, J, xi: bounds.check_one_point(m.spec(reg, J, xi), lam, kappa))


def run_volume(ctx: TaskContext) -> TaskOutcome:
    lam, N = float(ctx.get("lambda", 0.1)), float(ctx.get("truncation", 50.0))
    need = bounds.required_lambda(lam, ctx.weight)
    return _bound_task(ctx, "volume", need,
                       lambda m, reg, J, xi: bounds.check_volume_bound(m.spec(reg, J, xi), lam, N))


def run_tail(ctx: TaskContext) -> TaskOutcome:
    lam, r = float(ctx.get("lambda", 0.5)), float(ctx.get("r", 2.0))
    need = bounds.required_lambda(lam, ctx.weight)
    return _bound_task(ctx, "tail", need,
                       lambda m, reg, J, xi: bounds.check_tail_bound(m.spec(reg, J, xi), r, lam))


def run_lipschitz(ctx: TaskContext) -> TaskOutcome:
    R, lam = float(ctx.get("R", 2.0)), float(ctx.get("lambda", 1.0))
    w, q = ctx.weight, float(ctx.config.model.q)
    need = bounds.required_lambda(lam, w)
    rng = ctx.rng()

    def make(model, reg, J, xi):
        J = J.restrict(reg)
        Jp = CouplingField({e: v + float(rng.normal(scale=0.3)) for e, v in J.items()})
        for F in (J, Jp):   # shrink into the ball B_q(R)
            n = norm_q(F, w, q)
            if n > R:
                for e in F:
                    F[e] *= R / n * (1 - 1e-9)
        return bounds.check_lipschitz_in_J(model.spec(reg, J, xi), Jp, bounded_site(reg.sites[0]), R, lam)

    return _bound_task(ctx, "lipschitz", need, make)


def run_uniform_moment(ctx: TaskContext) -> TaskOutcome:
    lengths = ctx.get("lengths", [3, 5, 7, 9])
    model = ctx.model(bounds.required_lambda(1.0, ctx.weight))
    rep = bounds.check_uniform_moment(ctx.law, model, centred_chains(lengths, ctx.weight.d),
                                      (0,) * ctx.weight.d, ctx.n_realizations, ctx.seed)
    flat = abs(rep.details["slope"]) <= bounds.MC_SIGMAS * rep.details["slope_se"]
    rows = [{"length": L, "mean": m, "std_error": s, "c_nu": rep.details["c_nu"]}
            for L, m, s in zip(rep.details["sizes"], rep.details["means"], rep.details["std_errors"])]
    return TaskOutcome({"uniform_moment": rows},
                       [Check("uniform_moment_below_c_nu", rep.passed, False,
                              f"max mean {rep.lhs:.6g} vs c_nu {rep.rhs:.6g}"),
                        Check("uniform_moment_flat", flat, False,
                              f"slope {rep.details['slope']:.3g} +- {rep.details['slope_se']:.3g}")])


def run_corollary(ctx: TaskContext) -> TaskOutcome:
    model = ctx.model(bounds.required_lambda(1.0, ctx.weight))
    rep = bounds.check_moment_corollary(model, ctx.law, ctx.region(), ctx.n_realizations,
                                        seed=ctx.seed)
    return TaskOutcome({"corollary": _report_rows("corollary", [rep])},
                       [Check("moment_corollary", rep.passed, True,
                              f"violations {rep.details['violations']}")])


def run_dlr(ctx: TaskContext) -> TaskOutcome:
    region = ctx.region()
    inner = Region.from_sites(ctx.get("inner_sites", [region.sites[len(region) // 2]]))
    model = ctx.model(0.0, float(ctx.get("tol", 1e-8)))
    rng = ctx.rng()
    obs = moment_observables(region) + separating_family(region.sites)
    rows = []
    for case in range(int(ctx.get("n_cases", 20))):
        J, xi = _random_inputs(rng, region, float(ctx.get("coupling_range", 2.0)),
                               float(ctx.get("boundary_range", 2.0)))
        rows.append({"case": case, "discrepancy": dlr_check(model.spec(region, J, xi), inner, obs)})
    tol = float(ctx.get("tolerance", 1e-8))
    worst = max(r["discrepancy"] for r in rows)
    return TaskOutcome({"dlr": rows}, [Check("dlr", worst <= tol, True, f"max discrepancy {worst:.3g}")])


def _estimate_rows(run_id: str, region: Region, j_seed: int, estimates: list[GibbsEstimate]) -> list[dict]:
    return [{"run_id": run_id, "region_hash": region.digest(), "J_seed": j_seed, **e.row()}
            for e in estimates]


def run_engines(ctx: TaskContext) -> TaskOutcome:
    """Transfer vs tensor quadrature on a chain; MCMC vs quadrature on a small region."""
    chain = ctx.region("region", {"shape": "chain", "length": 3})
    small = ctx.region("mcmc_region", {"shape": "chain", "length": 2})
    model = ctx.model()
    rng = ctx.rng()
    rows, checks = [], []
    worst = 0.0
    obs = moment_observables(chain)
    for case in range(int(ctx.get("n_cases", 20))):
        J, xi = _random_inputs(rng, chain, float(ctx.get("coupling_range", 2.0)),
                               float(ctx.get("boundary_range", 2.0)))
        spec = model.spec(chain, J, xi)
        lz_q, v_q = tensor_expectations(spec, obs)
        lz_t, v_t = transfer_log_partition_with(spec, obs)
        worst = max(worst, abs(lz_q - lz_t), float(np.max(np.abs(v_q - v_t))))
        rows += _estimate_rows(f"transfer-{case}", chain, ctx.seed,
                               [GibbsEstimate("log_Z", lz_t, 0.0, "transfer", model.single_spin.size)])
    checks.append(Check("transfer_vs_quadrature", worst <= float(ctx.get("tolerance", 1e-10)), True,
                        f"max deviation {worst:.3g}"))
    sweeps = int(ctx.get("n_sweeps", ctx.config.engines.mcmc_sweeps))
    burn = int(ctx.config.engines.mcmc_burn_in)
    bad, total = 0, 0
    small_obs = moment_observables(small)
    for case in range(int(ctx.get("n_mcmc_cases", 3))):
        J, xi = _random_inputs(rng, small, float(ctx.get("mcmc_coupling_range", 1.0)),
                               float(ctx.get("mcmc_boundary_range", 1.0)))
        spec = model.spec(small, J, xi)
        _, exact = tensor_expectations(spec, small_obs)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", SamplerWarning)
            est = mcmc_kernel(spec, small_obs, sweeps, ctx.seed + case, burn_in=burn)
        for e, v in zip(est, exact):
            total += 1
            bad += abs(e.value - v) > bounds.MC_SIGMAS * e.std_error
        rows += _estimate_rows(f"mcmc-{case}", small, ctx.seed, est)
    checks.append(Check("mcmc_vs_quadrature", bad == 0, False, f"{bad}/{total} moments beyond 3 se"))
    return TaskOutcome({"estimates": rows}, checks)


def run_gks(ctx: TaskContext) -> TaskOutcome:
    length = int(ctx.get("length", 4))
    region = make_chain(length, 0, ctx.weight.d)
    k = int(ctx.get("edge_index", (length - 1) // 2))
    edge = (region.sites[k], region.sites[k + 1])
    grid = np.linspace(0.0, 1.0, int(ctx.get("n_lambda", 11)))
    curve = thermo.gks_interpolation(region, edge, ctx.model(), ctx.law, ctx.n_realizations,
                                     grid, ctx.seed, antithetic=bool(ctx.get("antithetic", True)))
    rows = [{"lambda": float(l), "P": float(p), "P_error": float(pe), "first_diff": float(f),
             "first_error": float(fe), "second_diff": float(s), "second_error": float(se),
             "exact_first": float(x1), "exact_second": float(x2)}
            for l, p, pe, f, fe, s, se, x1, x2 in zip(
                curve.lambdas, curve.P_values, curve.P_errors, curve.first_diffs, curve.first_errors,
                curve.second_diffs, curve.second_errors, curve.exact_first, curve.exact_second)]
    ok = curve.passes()
    return TaskOutcome({"gks": rows}, [Check(f"gks_{k}", v, False) for k, v in ok.items()])


def run_superadditivity(ctx: TaskContext) -> TaskOutcome:
    a_len, b_len = int(ctx.get("a_length", 2)), int(ctx.get("b_length", 2))
    d = ctx.weight.d
    A, B = make_chain(a_len, 0, d), make_chain(b_len, a_len + int(ctx.get("gap", 0)), d)
    U = Region.from_sites(A.sites + B.sites)
    rep = thermo.superadditivity_check(A, B, U, ctx.model(), ctx.law, ctx.n_realizations, ctx.seed)
    return TaskOutcome({"superadditivity": _report_rows("superadditivity", [rep])},
                       [Check("superadditivity", rep.passed, False,
                              f"gain {rep.details['gain_mean']:.4g} +- {rep.details['gain_se']:.2g}")])


def run_pressure(ctx: TaskContext) -> TaskOutcome:
    lengths = ctx.get("lengths", list(range(3, 22, 2)))
    regions = [make_chain(int(L), 0, ctx.weight.d) for L in lengths]
    model = ctx.model(2.0 * ctx.weight.d)
    series = thermo.quenched_pressure_trace(regions, model, ctx.law, ctx.n_realizations, ctx.seed)
    diffs, dse = series.differences()
    rows = [{"length": L, "pressure": v, "std_error": e, "boundary_ratio": r}
            for L, (_, v, e), r in zip(lengths, series.entries, series.boundary_ratios)]
    rng = ctx.rng()
    reports = []
    for reg in regions[:3]:
        for _ in range(int(ctx.get("n_cases", 10))):
            J, xi = _random_inputs(rng, reg, 2.0, 2.0)
            reports.append(thermo.pressure_bound_check(model.spec(reg, J, xi)))
    return TaskOutcome({"pressure": rows, "pressure_bound": _report_rows("pressure_bound", reports)},
                       [Check("pressure_non_decreasing", series.is_non_decreasing(), False),
                        Check("differences_shrinking", series.differences_shrinking(), False),
                        Check("pressure_bound", all(r.passed for r in reports), True)])


def run_state_independence(ctx: TaskContext) -> TaskOutcome:
    lengths = ctx.get("lengths", [3, 5, 9, 17, 33])
    d = ctx.weight.d
    regions = RegionSequence(tuple(centred_chains(lengths, d)), "van_hove")
    rate = float(ctx.get("decay", 1.0))
    reach = max(int(L) for L in lengths) // 2 + 2
    xi = SpinConfig({(k,) + (0,) * (d - 1): math.exp(-rate * abs(k)) for k in range(-reach, reach + 1)})
    model = ctx.model(bounds.required_lambda(1.0, ctx.weight))
    rep = thermo.state_independence_check(regions, model, ctx.law, xi, ctx.n_realizations, ctx.seed)
    rows = [{"length": L, "lhs": a, "rhs": b, "std_error": s}
            for L, a, b, s in zip(lengths, rep.details["lhs"], rep.details["rhs"], rep.details["std_errors"])]
    return TaskOutcome({"state_independence": rows},
                       [Check("boundary_estimate", rep.details["within"], False),
                        Check("boundary_effect_decreasing", rep.details["decreasing"], False)])


def run_metastate(ctx: TaskContext) -> TaskOutcome:
    lengths = ctx.get("lengths", list(range(3, 42, 2)))
    d = ctx.weight.d
    regions = centred_chains(lengths, d)
    value = float(ctx.get("boundary_value", 1.0))
    reach = max(int(L) for L in lengths) // 2 + 2
    xi = SpinConfig({(k,) + (0,) * (d - 1): value for k in range(-reach, reach + 1)})
    o, one = (0,) * d, (1,) + (0,) * (d - 1)
    obs = separating_family([o, one], [(o, one)])
    summary = thermo.empirical_metastate(regions, ctx.model(), ctx.law, ctx.n_realizations, obs,
                                         xi, ctx.seed)
    exact = all(np.all(t.increments() <= t.increment_bounds() * (1 + 1e-12) + 1e-15)
                for t in summary.traces)
    burn = int(ctx.get("burn_in", 5))
    disp = summary.dispersion
    monotone = bool(np.all(np.diff(disp[burn:]) <= 0))
    rows = [{"length": L, "dispersion": float(v)} for L, v in zip(lengths, disp)]
    return TaskOutcome({"metastate": rows},
                       [Check("cesaro_increment_bound", exact, True),
                        Check("dispersion_non_increasing", monotone, False)])


RUNNERS: dict[str, Callable[[TaskContext], TaskOutcome]] = {
    "one_point": run_one_point, "volume": run_volume, "tail": run_tail,
    "lipschitz": run_lipschitz, "uniform_moment": run_uniform_moment, "corollary": run_corollary,
    "dlr": run_dlr, "engines": run_engines, "gks": run_gks,
    "superadditivity": run_superadditivity, "pressure": run_pressure,
    "state_independence": run_state_independence, "metastate": run_metastate,
}
