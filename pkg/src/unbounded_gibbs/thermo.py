"""Pressures, Cesaro averages of finite-volume kernels, and disorder thermodynamics.

Disorder averages reuse the per-edge coupling streams: realization r is one
random field seen through every region, so differences between regions or
between interpolation parameters are paired (common random numbers).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .bounds import MC_SIGMAS, BoundReport, _digest, _report, uniform_moment_constant
from .disorder import DisorderLaw, a_nu, sample_couplings
from .gibbs import (GibbsSpec, Model, Observable, log_partition_estimate, pair_product,
                    pair_product_squared, tensor_expectations, transfer_log_partition_with)
from .lattice import Region, RegionSequence, edge_key, van_hove_ratio
from .single_spin import c_minus, c_plus
from .weights import CouplingField, SpinConfig


def _mean_se(values: np.ndarray, axis: int = 0) -> tuple[np.ndarray, np.ndarray]:
    values = np.asarray(values, dtype=float)
    n = values.shape[axis]
    se = values.std(axis=axis, ddof=1) / math.sqrt(n) if n > 1 else np.zeros_like(values.mean(axis=axis))
    return values.mean(axis=axis), se


def _log_z(spec: GibbsSpec, engine: str) -> float:
    return log_partition_estimate(spec, engine).value


def _exact_engine(region: Region) -> str:
    engine = choose_engine_for_region(region)
    if engine == "mcmc":
        raise ValueError("disorder averages need an exact engine (chain or <= 4 sites)")
    return engine


def choose_engine_for_region(region: Region) -> str:
    if region.chain_order() is not None:
        return "transfer"
    return "quadrature" if len(region) <= 4 else "mcmc"


def _union(regions: Sequence[Region]) -> Region:
    return Region.from_sites({s for reg in regions for s in reg.sites})


def local_pressure(spec: GibbsSpec, engine: str = "auto") -> tuple[float, float]:
    """p_Delta(J, xi) = log Z / |Delta| and its standard error."""
    est = log_partition_estimate(spec, engine)
    return est.value / len(spec.region), est.std_error / len(spec.region)


def pressure_bound_check(spec: GibbsSpec, engine: str = "auto") -> BoundReport:
    """|p_Delta| against the a-priori bound from the energy estimate."""
    m, d, p, q = spec.single_spin, spec.region.d, spec.exponents.p, spec.exponents.q
    size = len(spec.region)
    value, se = local_pressure(spec, engine)
    j_sum = 2 * np.sum(np.abs(spec.j_interior) ** q) + np.sum(np.abs(spec.j_cross) ** q)
    rhs = (2 * d / size * np.sum(np.abs(spec.xi) ** p) + j_sum / (2 * size)
           + max(math.log(c_plus(m, 2 * d, p)), -math.log(c_minus(m, 2 * d, p))))
    tol = 1e-8 if se == 0 else MC_SIGMAS * se
    return _report("pressure", abs(value), float(rhs), _digest(spec, "pressure"), tol)


@dataclass
class PressureSeries:
    entries: list[tuple[int, float, float]]
    boundary_ratios: list[float]
    realizations: np.ndarray | None = field(default=None, repr=False)   # (n_real, n_regions)

    @property
    def values(self) -> np.ndarray:
        return np.array([v for _, v, _ in self.entries])

    @property
    def errors(self) -> np.ndarray:
        return np.array([e for _, _, e in self.entries])

    def differences(self) -> tuple[np.ndarray, np.ndarray]:
        """Successive differences and their (paired, when available) standard errors."""
        if self.realizations is not None and len(self.realizations) > 1:
            return _mean_se(np.diff(self.realizations, axis=1))
        err = self.errors
        return np.diff(self.values), np.sqrt(err[1:] ** 2 + err[:-1] ** 2)

    def is_non_decreasing(self, sigmas: float = MC_SIGMAS) -> bool:
        diff, se = self.differences()
        return bool(np.all(diff >= -sigmas * se))

    def differences_shrinking(self, sigmas: float = MC_SIGMAS) -> bool:
        """Each successive difference is no larger than the previous one, within error."""
        if self.realizations is not None and len(self.realizations) > 1:
            second, se = _mean_se(np.diff(self.realizations, n=2, axis=1))
        else:
            diff, dse = self.differences()
            second, se = np.diff(diff), np.sqrt(dse[1:] ** 2 + dse[:-1] ** 2)
        return bool(np.all(second <= sigmas * se))


def _disorder_log_z(model: Model, law: DisorderLaw, regions: Sequence[Region], n_realizations: int,
                    seed: int, xi: SpinConfig | None = None, engine: str | None = None) -> np.ndarray:
    """log Z_{Delta_k}(J_r, xi) for realizations r (rows) and regions k (columns)."""
    hull = _union(regions)
    engines = [engine or _exact_engine(reg) for reg in regions]
    out = np.empty((n_realizations, len(regions)))
    for r in range(n_realizations):
        J = sample_couplings(law, hull, seed, r)
        for k, (reg, eng) in enumerate(zip(regions, engines)):
            out[r, k] = _log_z(model.spec(reg, J, xi), eng)
    return out


def quenched_pressure_trace(sequence: RegionSequence | Sequence[Region], model: Model,
                            law: DisorderLaw, n_realizations: int, seed: int = 0,
                            engine: str | None = None) -> PressureSeries:
    """E_nu p_{Delta_n}(J, 0) along the sequence, with common couplings across regions."""
    regions = list(sequence)
    logz = _disorder_log_z(model, law, regions, n_realizations, seed, None, engine)
    p = logz / np.array([len(r) for r in regions])
    mean, se = _mean_se(p)
    entries = [(i, float(v), float(e)) for i, (v, e) in enumerate(zip(mean, se))]
    return PressureSeries(entries, [van_hove_ratio(r) for r in regions], p)


def superadditivity_check(region_a: Region, region_b: Region, union: Region, model: Model,
                          law: DisorderLaw, n_realizations: int, seed: int = 0,
                          engine: str | None = None) -> BoundReport:
    """E log Z_A + E log Z_B <= E log Z_{A u B} (xi = 0), within 3 standard errors."""
    if set(region_a.sites) & set(region_b.sites):
        raise ValueError("regions overlap")
    if set(union.sites) != set(region_a.sites) | set(region_b.sites):
        raise ValueError("union must consist of exactly the sites of both regions")
    logz = _disorder_log_z(model, law, [region_a, region_b, union], n_realizations, seed, None, engine)
    gain = logz[:, 2] - logz[:, 0] - logz[:, 1]
    _, se = _mean_se(gain)
    lhs = float(logz[:, 0].mean() + logz[:, 1].mean())
    rhs = float(logz[:, 2].mean())
    return _report("superadditivity", lhs, rhs,
                   _digest(law, seed, n_realizations, region_a.digest(), region_b.digest()),
                   MC_SIGMAS * float(se) + 1e-12,
                   {"gain_mean": float(gain.mean()), "gain_se": float(se),
                    "min_gain": float(gain.min())})


@dataclass
class InterpolationCurve:
    lambdas: np.ndarray
    P_values: np.ndarray
    P_errors: np.ndarray
    first_diffs: np.ndarray        # central differences at every grid point
    first_errors: np.ndarray
    second_diffs: np.ndarray       # central second differences at every grid point
    second_errors: np.ndarray
    exact_first: np.ndarray        # E J_e <s s>_lambda, from the kernel
    exact_second: np.ndarray       # E J_e^2 Var_lambda(s s)
    exact_first_errors: np.ndarray
    exact_second_errors: np.ndarray
    half_step_first_at_zero: float  # P'(0) with the grid spacing halved
    increase: tuple[float, float]   # P(last) - P(first) and its paired standard error

    @property
    def derivative_at_zero(self) -> tuple[float, float]:
        return float(self.first_diffs[0]), float(self.first_errors[0])

    def passes(self, sigmas: float = MC_SIGMAS, floor: float = 1e-10) -> dict[str, bool]:
        fd0, err0 = self.derivative_at_zero
        inc, inc_err = self.increase
        return {
            "first_derivative_zero": abs(fd0) <= sigmas * err0 + floor,
            "convex": bool(np.all(self.second_diffs >= -sigmas * self.second_errors - floor)),
            "monotone": inc >= -sigmas * inc_err - floor,
        }


def gks_interpolation(region: Region, edge, model: Model, law: DisorderLaw, n_realizations: int,
                      lambda_grid: Sequence[float] | None = None, seed: int = 0,
                      engine: str | None = None, antithetic: bool = False) -> InterpolationCurve:
    """P(lambda) = E_nu log int exp(lambda J_e s s - H_without_e) d chi with xi = 0.

    Every realization is evaluated on the whole grid plus one ghost point on
    each side, so finite differences are paired and central everywhere.
    With ``antithetic`` each J is accompanied by -J and the pair average is
    one sample.
    """
    e = edge_key(*edge)
    if e not in region.interior_edge_keys():
        raise ValueError("edge must be an interior edge of the region")
    lams = np.linspace(0.0, 1.0, 11) if lambda_grid is None else np.asarray(lambda_grid, dtype=float)
    steps = np.diff(lams)
    if len(lams) < 3 or np.any(steps <= 0) or not np.allclose(steps, steps[0]):
        raise ValueError("lambda grid must be uniform and strictly increasing")
    h = float(steps[0])
    full = np.concatenate([[lams[0] - h], lams, [lams[-1] + h], [lams[0] - h / 2, lams[0] + h / 2]])
    engine = engine or _exact_engine(region)
    i, j = region.index(e[0]), region.index(e[1])
    x, y = region.sites[i], region.sites[j]
    pair_obs = [pair_product(x, y), pair_product_squared(x, y)]

    def evaluate(J: CouplingField):
        vals = np.empty(len(full))
        d1 = np.empty(len(lams))
        d2 = np.empty(len(lams))
        je = J[e]
        for k, lam in enumerate(full):
            Jl = CouplingField(J)
            Jl[e] = lam * je
            spec = model.spec(region, Jl)
            if engine == "transfer":
                logz, mom = transfer_log_partition_with(spec, pair_obs)
            else:
                logz, mom = tensor_expectations(spec, pair_obs)
            vals[k] = logz
            if 1 <= k <= len(lams):
                d1[k - 1] = je * mom[0]
                d2[k - 1] = je ** 2 * (mom[1] - mom[0] ** 2)
        return vals, d1, d2

    rows, r1, r2 = [], [], []
    for r in range(n_realizations):
        J = sample_couplings(law, region, seed, r)
        v, d1, d2 = evaluate(J)
        if antithetic:
            w, e1, e2 = evaluate(-J)
            v, d1, d2 = (v + w) / 2, (d1 + e1) / 2, (d2 + e2) / 2
        rows.append(v)
        r1.append(d1)
        r2.append(d2)
    V = np.array(rows)
    grid = V[:, 1:len(lams) + 1]
    padded = V[:, :len(lams) + 2]
    first = (padded[:, 2:] - padded[:, :-2]) / (2 * h)
    second = (padded[:, 2:] - 2 * padded[:, 1:-1] + padded[:, :-2]) / h ** 2
    half = (V[:, -1] - V[:, -2]) / h
    P, P_err = _mean_se(grid)
    f1, f1_err = _mean_se(first)
    f2, f2_err = _mean_se(second)
    x1, x1_err = _mean_se(np.array(r1))
    x2, x2_err = _mean_se(np.array(r2))
    inc, inc_err = _mean_se(grid[:, -1] - grid[:, 0])
    return InterpolationCurve(lams, P, P_err, f1, f1_err, f2, f2_err, x1, x2, x1_err, x2_err,
                              float(half.mean()), (float(inc), float(inc_err)))


@dataclass
class CesaroTrace:
    raw: np.ndarray        # (N, m): row n is (pi_{Delta_n}(f_i))_i
    cesaro: np.ndarray     # (N, m): row N-1 is the mean of rows 0..N-1 of raw

    @classmethod
    def from_raw(cls, raw) -> "CesaroTrace":
        raw = np.atleast_2d(np.asarray(raw, dtype=float))
        return cls(raw, running_means(raw))

    def increments(self) -> np.ndarray:
        """||cesaro[N+1] - cesaro[N]|| (sup norm), N = 1..len-1 in 1-based terms."""
        return np.abs(np.diff(self.cesaro, axis=0)).max(axis=1)

    def increment_bounds(self) -> np.ndarray:
        """max_{n <= N+1} ||raw[n] - cesaro[N]|| / (N+1) for the same N."""
        out = np.empty(len(self.raw) - 1)
        for N in range(1, len(self.raw)):
            dev = np.abs(self.raw[: N + 1] - self.cesaro[N - 1]).max()
            out[N - 1] = dev / (N + 1)
        return out

    def range_bounds(self) -> np.ndarray:
        """(max - min of raw so far) / (N+1), a cruder bound on the increments."""
        out = np.empty(len(self.raw) - 1)
        for N in range(1, len(self.raw)):
            seen = self.raw[: N + 1]
            out[N - 1] = (seen.max(axis=0) - seen.min(axis=0)).max() / (N + 1)
        return out


def running_means(raw: np.ndarray) -> np.ndarray:
    """Row N-1 is raw[:N].mean(axis=0), computed directly for each N."""
    return np.array([raw[:N].mean(axis=0) for N in range(1, len(raw) + 1)])


def _kernel_values(spec: GibbsSpec, observables: Sequence[Observable], engine: str) -> np.ndarray:
    if engine == "transfer":
        return transfer_log_partition_with(spec, observables)[1]
    return tensor_expectations(spec, observables)[1]


def cesaro_kernels(sequence: RegionSequence | Sequence[Region], J: CouplingField, model: Model,
                   observables: Sequence[Observable], xi: SpinConfig | None = None,
                   engine: str | None = None) -> CesaroTrace:
    """Kernel expectations along the sequence for one coupling field, and their running means."""
    regions = list(sequence)
    raw = np.array([_kernel_values(model.spec(reg, J, xi), observables, engine or _exact_engine(reg))
                    for reg in regions])
    return CesaroTrace.from_raw(raw)


@dataclass
class MetastateSummary:
    traces: list[CesaroTrace]
    mean: np.ndarray          # across-realization mean of cesaro[N_max]
    covariance: np.ndarray    # across-realization covariance of cesaro[N_max]
    dispersion: np.ndarray    # trace of the across-realization covariance of cesaro[N], per N


def empirical_metastate(sequence: RegionSequence | Sequence[Region], model: Model, law: DisorderLaw,
                        n_realizations: int, observables: Sequence[Observable],
                        xi: SpinConfig | None = None, seed: int = 0,
                        engine: str | None = None) -> MetastateSummary:
    regions = list(sequence)
    hull = _union(regions)
    traces = [cesaro_kernels(regions, sample_couplings(law, hull, seed, r), model, observables, xi, engine)
              for r in range(n_realizations)]
    stack = np.array([t.cesaro for t in traces])            # (R, N, m)
    if n_realizations > 1:
        disp = stack.var(axis=0, ddof=1).sum(axis=1)
        cov = np.atleast_2d(np.cov(stack[:, -1, :], rowvar=False))
    else:
        disp = np.zeros(len(regions))
        cov = np.zeros((len(observables), len(observables)))
    return MetastateSummary(traces, stack[:, -1, :].mean(axis=0), cov, disp)


def boundary_estimate(region: Region, law: DisorderLaw, model: Model) -> float:
    """(2d |boundary| / |Delta|) (2 c_nu + a_nu)."""
    d = region.d
    return 2 * d * len(region.boundary) / len(region) * (2 * uniform_moment_constant(law, model) + a_nu(law))


def state_independence_check(sequence: RegionSequence | Sequence[Region], model: Model,
                             law: DisorderLaw, xi: SpinConfig, n_realizations: int, seed: int = 0,
                             engine: str | None = None) -> BoundReport:
    """|E p(J, xi) - E p(J, 0)| under the boundary estimate, decreasing along the sequence."""
    regions = list(sequence)
    with_xi = _disorder_log_z(model, law, regions, n_realizations, seed, xi, engine)
    without = _disorder_log_z(model, law, regions, n_realizations, seed, None, engine)
    sizes = np.array([len(r) for r in regions], dtype=float)
    diff = (with_xi - without) / sizes
    mean, se = _mean_se(diff)
    lhs = np.abs(mean)
    rhs = np.array([boundary_estimate(r, law, model) for r in regions])
    within = bool(np.all(lhs <= rhs + MC_SIGMAS * se))
    step_se = np.sqrt(se[1:] ** 2 + se[:-1] ** 2)
    decreasing = bool(np.all(np.diff(lhs) <= MC_SIGMAS * step_se + 1e-15))
    worst = int(np.argmax(lhs - rhs))
    rep = _report("state_independence", float(lhs[worst]), float(rhs[worst]),
                  _digest(law, seed, n_realizations, sorted(xi.items()), [r.digest() for r in regions]),
                  MC_SIGMAS * float(se[worst]),
                  {"lhs": lhs.tolist(), "rhs": rhs.tolist(), "std_errors": se.tolist(),
                   "within": within, "decreasing": decreasing,
                   "min_realization_diff": float(diff.min())})
    return BoundReport(rep.bound_name, rep.lhs, rep.rhs, rep.margin, rep.inputs_digest,
                       within and decreasing, rep.tolerance, rep.details)
