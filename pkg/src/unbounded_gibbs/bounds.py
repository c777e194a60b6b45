"""Numerical verification of the explicit a-priori estimates.

Deterministic checks run on the quadrature grid.  The grid's discrete
measure is a valid single-spin law in its own right, and every constant on
the right-hand sides is evaluated with that same measure, so these
inequalities must hold up to float rounding.  MCMC-backed checks pass within
three standard errors instead.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np
from scipy.special import logsumexp

from .disorder import DisorderLaw, a_nu, sample_couplings
from .gibbs import GibbsSpec, Model, Observable, batch_means, run_chain, tensor_expectations
from .gibbs.quadrature import MAX_SITES
from .gibbs.transfer import transfer_log_partition_with
from .lattice import Region, RegionSequence
from .single_spin import SingleSpinMeasure, one_point_constant
from .weights import CouplingField, WeightFunction, norm_p, norm_q

QUADRATURE_TOL = 1e-8
MC_SIGMAS = 3.0


@dataclass(frozen=True)
class BoundReport:
    bound_name: str
    lhs: float
    rhs: float
    margin: float
    inputs_digest: str
    passed: bool
    tolerance: float
    details: dict = field(default_factory=dict, compare=False)

    def row(self) -> dict:
        return {"bound_name": self.bound_name, "lhs": self.lhs, "rhs": self.rhs,
                "margin": self.margin, "inputs_digest": self.inputs_digest,
                "passed": self.passed, "tolerance": self.tolerance}


def _digest(*parts) -> str:
    h = hashlib.sha256()
    for p in parts:
        if isinstance(p, GibbsSpec):
            h.update(p.region.digest().encode())
            h.update(np.ascontiguousarray(p.j_interior).tobytes())
            h.update(np.ascontiguousarray(p.j_cross).tobytes())
            h.update(np.ascontiguousarray(p.xi).tobytes())
        else:
            h.update(repr(p).encode())
    return h.hexdigest()[:16]


def _report(name, lhs, rhs, digest, tol, details=None, log_lhs=None, log_rhs=None) -> BoundReport:
    """Pass/fail in log space when both logs are given (relative tolerance)."""
    if log_lhs is not None and log_rhs is not None:
        passed = log_lhs <= log_rhs + tol
    else:
        passed = lhs <= rhs + tol
    return BoundReport(name, float(lhs), float(rhs), float(rhs - lhs), digest, bool(passed),
                       tol, details or {})


def _safe_exp(x: float) -> float:
    return math.exp(x) if x < 709 else math.inf


def spec_norms(spec: GibbsSpec) -> tuple[float, float]:
    """(||J||_q^q over the region's edges, ||xi||_p^p over its boundary)."""
    p, q, w = spec.exponents.p, spec.exponents.q, spec.weight
    j = norm_q(spec.couplings.restrict(spec.region), w, q) ** q
    xi = norm_p(spec.boundary_condition, w, p) ** p
    return j, xi


def config_norms_pp(spec: GibbsSpec, sigma: np.ndarray) -> np.ndarray:
    """||sigma||_p^p for inner configurations (..., |Delta|), plus the boundary part."""
    p, w = spec.exponents.p, spec.weight
    ws = w(spec.region.coords())
    boundary = float(np.abs(spec.xi) ** p @ w(spec.region.boundary_coords())) if len(spec.xi) else 0.0
    return np.abs(sigma) ** p @ ws + boundary


def check_one_point(spec: GibbsSpec, lam: float, kappa: float) -> BoundReport:
    """Exponential moment of one spin against exp[C + 2k sum|xi|^p + 2k^{1-q} sum|J|^q]."""
    if len(spec.region) != 1:
        raise ValueError("one-point bound needs a single-site region")
    m, d = spec.single_spin, spec.region.d
    p, q = spec.exponents.p, spec.exponents.q
    const = one_point_constant(m, lam, kappa, d, p)      # validates lam against the grid
    u = m.nodes
    tilt = m.log_probs + spec.external_field[0] * u
    log_lhs = float(logsumexp(tilt + lam * np.abs(u) ** p) - logsumexp(tilt))
    log_rhs = (const + 2 * kappa * np.sum(np.abs(spec.xi) ** p)
               + 2 * kappa ** (1 - q) * np.sum(np.abs(spec.j_cross) ** q))
    return _report("one_point", _safe_exp(log_lhs), _safe_exp(log_rhs),
                   _digest(spec, lam, kappa), QUADRATURE_TOL,
                   {"log_lhs": log_lhs, "log_rhs": float(log_rhs), "C": const},
                   log_lhs, float(log_rhs))


@dataclass(frozen=True)
class VolumeConstants:
    upsilon1: float
    upsilon2: float
    upsilon3: float
    lam: float

    def exponent(self, j_qq: float, xi_pp: float) -> float:
        return self.upsilon1 + self.upsilon2 * j_qq + self.upsilon3 * xi_pp


def volume_constants(lam: float, w: WeightFunction, q: float, m: SingleSpinMeasure) -> VolumeConstants:
    """(Upsilon_1, Upsilon_2, Upsilon_3) for the exponential-moment bound at lam."""
    if not lam > 0:
        raise ValueError("lambda must be positive")
    d, wt, w0 = w.d, w.total_mass, w.w0
    p = 2 * q / (q - 1)
    kappa = lam * wt / (8 * d * w0)
    u1 = 2 * one_point_constant(m, lam * wt, kappa, d, p)
    u2 = (4 / wt ** q) * (lam / (8 * d * w0)) ** (1 - q)
    u3 = lam * (1 + 1 / (2 * d))
    return VolumeConstants(u1, u2, u3, lam)


def required_lambda(lam: float, w: WeightFunction) -> float:
    """Largest exponential-moment argument that volume_constants(lam) evaluates."""
    return lam * w.total_mass * (1 + 1 / (4 * w.w0))


def _norm_observable(spec: GibbsSpec, fn: Callable[[np.ndarray], np.ndarray], name: str) -> Observable:
    return Observable(name, lambda v: fn(config_norms_pp(spec, v)), spec.region.sites)


def _expectation(spec: GibbsSpec, obs: Observable, engine: str, n_sweeps: int, seed: int
                 ) -> tuple[float, float]:
    if engine == "quadrature":
        return float(tensor_expectations(spec, [obs])[1][0]), 0.0
    if engine == "mcmc":
        chain = run_chain(spec, n_sweeps, seed)
        return batch_means(obs(chain.samples))
    raise ValueError(f"engine {engine!r} cannot evaluate whole-region observables")


def _default_engine(spec: GibbsSpec) -> str:
    return "quadrature" if len(spec.region) <= MAX_SITES else "mcmc"


def check_volume_bound(spec: GibbsSpec, lam: float, truncation: float, engine: str | None = None,
                       n_sweeps: int = 100_000, seed: int = 0) -> BoundReport:
    """pi(F_N) <= exp(U1 + U2 ||J||^q + U3 ||xi||^p), F_N = exp(lam min(||s||^p, N))."""
    if truncation <= 0:
        raise ValueError("truncation N must be positive")
    engine = engine or _default_engine(spec)
    consts = volume_constants(lam, spec.weight, spec.exponents.q, spec.single_spin)
    j_qq, xi_pp = spec_norms(spec)
    obs = _norm_observable(spec, lambda s: np.exp(lam * np.minimum(s, truncation)), "F_N")
    lhs, se = _expectation(spec, obs, engine, n_sweeps, seed)
    log_rhs = consts.exponent(j_qq, xi_pp)
    details = {"engine": engine, "std_error": se, "N": truncation, "lambda": lam,
               "upsilon": (consts.upsilon1, consts.upsilon2, consts.upsilon3),
               "log_rhs": log_rhs}
    digest = _digest(spec, "volume", lam, truncation)
    if engine == "quadrature":
        return _report("volume", lhs, _safe_exp(log_rhs), digest, QUADRATURE_TOL, details,
                       math.log(lhs), log_rhs)
    return _report("volume", lhs, _safe_exp(log_rhs), digest, MC_SIGMAS * se, details)


def lipschitz_constants(spec: GibbsSpec, R: float, lam: float = 1.0) -> tuple[float, float]:
    """(Theta_1(Delta, R), Theta_2(Delta, R)) evaluated at lam."""
    w, q, d = spec.weight, spec.exponents.q, spec.region.d
    consts = volume_constants(lam, w, q, spec.single_spin)
    edges = spec.region.edge_keys()
    a = np.array([e[0] for e in edges], dtype=float)
    b = np.array([e[1] for e in edges], dtype=float)
    edge_sum = float(np.sum((w(a) + w(b)) ** (-q)))
    theta1 = 8 * d * (1 + w.w0) * (consts.upsilon1 + consts.upsilon2 * R ** q) / lam + 2 * edge_sum
    theta2 = 4 * d * (1 + w.w0) * (1 + 2 * consts.upsilon3 / lam)
    return theta1, theta2


def check_lipschitz_in_J(spec: GibbsSpec, couplings_prime: CouplingField, f: Observable,
                         R: float, lam: float = 1.0) -> BoundReport:
    """|pi(f|J) - pi(f|J')| <= ||J - J'||_q ||f||_inf (Theta_1 + Theta_2 ||xi||_p^p)."""
    if f.bound is None:
        raise ValueError("observable must declare a sup-norm bound")
    w, q = spec.weight, spec.exponents.q
    other = spec.with_couplings(couplings_prime)
    j1 = spec.couplings.restrict(spec.region)
    j2 = couplings_prime.restrict(spec.region)
    if norm_q(j1, w, q) > R * (1 + 1e-12) or norm_q(j2, w, q) > R * (1 + 1e-12):
        raise ValueError("both coupling fields must lie in the ball of radius R")
    diff = CouplingField({e: j1[e] - j2[e] for e in j1})
    v1 = tensor_expectations(spec, [f])[1][0]
    v2 = tensor_expectations(other, [f])[1][0]
    theta1, theta2 = lipschitz_constants(spec, R, lam)
    _, xi_pp = spec_norms(spec)
    rhs = norm_q(diff, w, q) * f.bound * (theta1 + theta2 * xi_pp)
    return _report("lipschitz_in_J", abs(v1 - v2), rhs,
                   _digest(spec, other, f.name, R, lam), QUADRATURE_TOL,
                   {"theta": (theta1, theta2), "values": (float(v1), float(v2))})


def check_tail_bound(spec: GibbsSpec, r: float, lam: float, engine: str | None = None,
                     n_sweeps: int = 100_000, seed: int = 0) -> BoundReport:
    """pi(||s||_p > r) <= exp(-lam r^p + U1 + U2 ||J||^q + U3 ||xi||^p)."""
    if not r > 0:
        raise ValueError("r must be positive")
    engine = engine or _default_engine(spec)
    p = spec.exponents.p
    consts = volume_constants(lam, spec.weight, spec.exponents.q, spec.single_spin)
    j_qq, xi_pp = spec_norms(spec)
    obs = _norm_observable(spec, lambda s: (s > r ** p).astype(float), "tail")
    lhs, se = _expectation(spec, obs, engine, n_sweeps, seed)
    log_rhs = -lam * r ** p + consts.exponent(j_qq, xi_pp)
    rhs = _safe_exp(log_rhs)
    tol = QUADRATURE_TOL if engine == "quadrature" else MC_SIGMAS * se
    return _report("tail", lhs, rhs, _digest(spec, "tail", r, lam), tol,
                   {"engine": engine, "std_error": se, "log_rhs": log_rhs})


def uniform_moment_constant(law: DisorderLaw, model: Model) -> float:
    """c_nu = U1(1) + U2(1) E||J||_q^q with E||J||_q^q = 2d |w| a_nu for the centred weight."""
    w = model.weight
    consts = volume_constants(1.0, w, law.q, model.single_spin)
    return consts.upsilon1 + consts.upsilon2 * 2 * w.d * w.total_mass * a_nu(law)


def site_moments_over_disorder(model: Model, law: DisorderLaw, regions: Sequence[Region],
                               x, n_realizations: int, seed: int, common: bool = False
                               ) -> np.ndarray:
    """E_pi |s(x)|^p with xi = 0 for each (realization, region); transfer engine.

    With ``common`` every region sees the same coupling field (per-edge
    streams make the restriction consistent); otherwise each region draws
    its own independent realizations.
    """
    x = tuple(x)
    p = model.p
    obs = Observable("|s|^p", lambda v: np.abs(v[:, 0]) ** p, (x,))
    out = np.empty((n_realizations, len(regions)))
    hull = _union(regions)
    for r in range(n_realizations):
        J = sample_couplings(law, hull, seed, r) if common else None
        for k, reg in enumerate(regions):
            Jk = J if common else sample_couplings(law, reg, seed, k * n_realizations + r)
            out[r, k] = transfer_log_partition_with(model.spec(reg, Jk), [obs])[1][0]
    return out


def _union(regions: Sequence[Region]) -> Region:
    return Region.from_sites({s for reg in regions for s in reg.sites})


def paired_slope(sizes: Sequence[float], values: np.ndarray) -> tuple[float, float]:
    """Least-squares slope fitted per realization, then averaged: (mean, std error)."""
    xs = np.asarray(sizes, dtype=float)
    xc = xs - xs.mean()
    slopes = (values - values.mean(axis=1, keepdims=True)) @ xc / (xc @ xc)
    return float(slopes.mean()), float(slopes.std(ddof=1) / math.sqrt(len(slopes)))


def independent_slope(sizes: Sequence[float], means: np.ndarray, ses: np.ndarray
                      ) -> tuple[float, float]:
    """Least-squares slope of independent means and its standard error."""
    xs = np.asarray(sizes, dtype=float)
    xc = xs - xs.mean()
    sxx = xc @ xc
    return float(xc @ means / sxx), float(math.sqrt(np.sum(xc ** 2 * ses ** 2)) / sxx)


def check_uniform_moment(law: DisorderLaw, model: Model, sequence: RegionSequence | Sequence[Region],
                         x, n_realizations: int, seed: int = 0, common: bool = False
                         ) -> BoundReport:
    """Disorder-and-Gibbs average of |s(x)|^p (xi = 0) against c_nu, for every region.

    ``details`` carries the regression slope of the averages against |Delta|
    (independent samples per region unless ``common``, then paired).
    """
    regions = list(sequence)
    x = tuple(x)
    for reg in regions:
        if x not in reg:
            raise ValueError(f"site {x} is not inside region {reg.digest()}")
    if n_realizations < 2:
        raise ValueError("need at least two realizations for error bars")
    vals = site_moments_over_disorder(model, law, regions, x, n_realizations, seed, common)
    means = vals.mean(axis=0)
    ses = vals.std(axis=0, ddof=1) / math.sqrt(n_realizations)
    sizes = [len(r) for r in regions]
    if common:
        slope, slope_se = paired_slope(sizes, vals)
    else:
        slope, slope_se = independent_slope(sizes, means, ses)
    c_nu = uniform_moment_constant(law, model)
    worst = int(np.argmax(means - c_nu))
    return _report("uniform_moment", float(means[worst]), c_nu,
                   _digest(law, x, n_realizations, seed, common, [r.digest() for r in regions]),
                   MC_SIGMAS * float(ses[worst]),
                   {"means": means.tolist(), "std_errors": ses.tolist(), "sizes": sizes,
                    "slope": slope, "slope_se": slope_se, "c_nu": c_nu,
                    "all_below": bool(np.all(means <= c_nu + MC_SIGMAS * ses))})


def check_moment_corollary(model: Model, law: DisorderLaw, region: Region, n_realizations: int,
                           phi: Callable[[np.ndarray], np.ndarray] = np.exp, seed: int = 0
                           ) -> BoundReport:
    """E_nu Phi(pi ||s||_p^p) <= E_nu Phi(A + B ||J||_q^q) with A = U1(1), B = U2(1), xi = 0.

    Each realization also satisfies pi ||s||_p^p <= A + B ||J||_q^q on its own;
    the number of violations is reported in ``details``.
    """
    consts = volume_constants(1.0, model.weight, law.q, model.single_spin)
    engine = "quadrature" if len(region) <= MAX_SITES else None
    if engine is None:
        raise ValueError("corollary check needs a region small enough for quadrature")
    inner, outer, violations = [], [], 0
    for r in range(n_realizations):
        spec = model.spec(region, sample_couplings(law, region, seed, r))
        obs = _norm_observable(spec, lambda s: s, "norm_pp")
        a = float(tensor_expectations(spec, [obs])[1][0])
        b = consts.upsilon1 + consts.upsilon2 * spec_norms(spec)[0]
        violations += a > b + QUADRATURE_TOL
        inner.append(a)
        outer.append(b)
    lhs = float(np.mean(phi(np.array(inner))))
    rhs = float(np.mean(phi(np.array(outer))))
    rep = _report("moment_corollary", lhs, rhs, _digest(law, region.digest(), n_realizations, seed),
                  QUADRATURE_TOL, {"violations": violations, "A": consts.upsilon1,
                                   "B": consts.upsilon2})
    return rep if violations == 0 else replace(rep, passed=False)
