"""Single-spin law chi(du) ~ exp(-V(u)) du and its quadrature representation.

The measure is replaced by a finite, symmetric set of nodes with positive
probabilities.  That discrete measure is itself a legitimate single-spin law
(it has every exponential moment), so any identity or inequality verified
with it is verified exactly, not up to discretisation error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

_TAIL_LOG_MARGIN = 40.0   # neglected log-mass below the peak of e^{-V + lam |u|^p}
_PANEL_GRADING = 0.7      # panel edges at U (k/K)^0.7: denser toward the cutoff


@dataclass(frozen=True)
class Potential:
    """Even polynomial V(u) = sum_k coefficients[k] u^k (ascending powers)."""

    coefficients: tuple[float, ...]

    def __post_init__(self):
        c = tuple(float(v) for v in self.coefficients)
        while len(c) > 1 and c[-1] == 0.0:
            c = c[:-1]
        object.__setattr__(self, "coefficients", c)
        if any(v != 0.0 for v in c[1::2]):
            raise ValueError("V must be even: odd coefficients must vanish")
        if len(c) < 3 or c[-1] <= 0:
            raise ValueError("V needs positive leading coefficient and degree >= 2")

    @classmethod
    def monomial(cls, degree: int, scale: float = 1.0) -> "Potential":
        c = [0.0] * (degree + 1)
        c[degree] = scale
        return cls(tuple(c))

    @property
    def degree(self) -> int:
        return len(self.coefficients) - 1

    def __call__(self, u):
        return np.polynomial.polynomial.polyval(np.asarray(u, dtype=float), self.coefficients)


@dataclass(frozen=True)
class QuadratureGrid:
    nodes: np.ndarray
    weights: np.ndarray
    cutoff: float
    panels: int
    order: int


@dataclass(frozen=True, eq=False)
class SingleSpinMeasure:
    """Discrete symmetric approximation of chi.

    ``probs`` sum to one; ``log_probs`` are their logarithms.  ``max_lambda``
    and ``p`` record the exponential moments exp(lam |u|^p) the grid was
    built to resolve.
    """

    potential: Potential
    normalizer: float
    quadrature: QuadratureGrid
    log_probs: np.ndarray
    p: float | None
    max_lambda: float
    tol: float

    @property
    def nodes(self) -> np.ndarray:
        return self.quadrature.nodes

    @property
    def probs(self) -> np.ndarray:
        return np.exp(self.log_probs)

    @property
    def size(self) -> int:
        return self.nodes.size

    def expect(self, f) -> float:
        """Integral of f(u) against the normalised measure."""
        return float(self.probs @ np.asarray(f(self.nodes), dtype=float))

    def moment(self, k: int) -> float:
        return self.expect(lambda u: u ** k)

    def log_exp_moment(self, lam: float, p: float | None = None) -> float:
        p = self.p if p is None else p
        return float(logsumexp(self.log_probs + lam * np.abs(self.nodes) ** p))


def _cutoff(V: Potential, lam: float, p: float | None) -> float:
    def g(u):
        out = -V(u)
        if lam > 0:
            out = out + lam * np.abs(u) ** p
        return out

    scan = np.linspace(0.0, 50.0, 200001)
    vals = g(scan)
    peak = int(np.argmax(vals))
    beyond = np.nonzero((vals < vals[peak] - _TAIL_LOG_MARGIN) & (scan > scan[peak]))[0]
    if beyond.size == 0:
        raise RuntimeError("cutoff search failed: integrand does not decay on [0, 50]")
    return float(scan[beyond[0]])


def _composite_grid(U: float, panels: int, order: int) -> tuple[np.ndarray, np.ndarray]:
    # panels on [0, U], mirrored so the node set is exactly symmetric
    x, w = np.polynomial.legendre.leggauss(order)
    edges = U * np.linspace(0.0, 1.0, panels + 1) ** _PANEL_GRADING
    a, b = edges[:-1], edges[1:]
    pos = (((b - a) / 2)[:, None] * x + ((a + b) / 2)[:, None]).ravel()
    pw = (((b - a) / 2)[:, None] * w).ravel()
    return np.concatenate([-pos[::-1], pos]), np.concatenate([pw[::-1], pw])


def _fingerprint(V, nodes, weights, lam, p) -> np.ndarray:
    logw = np.log(weights) - V(nodes)
    logz = logsumexp(logw)
    probs = np.exp(logw - logz)
    feats = [logz] + [probs @ nodes ** k for k in range(2, V.degree + 1, 2)]
    if lam > 0:
        feats.append(logsumexp(logw + lam * np.abs(nodes) ** p) - logz)
    return np.array(feats)


def build_measure(V: Potential, p: float | None = 4.0, max_lambda: float = 0.0,
                  tol: float = 1e-12, order: int = 8, max_panels: int = 256,
                  cutoff: float | None = None) -> SingleSpinMeasure:
    """Quadrature representation of chi ~ exp(-V) du.

    Panels are refined until moments up to deg V and the exponential moment
    at ``max_lambda`` change by less than ``tol`` under refinement.

    Parameters
    ----------
    V : Potential
    p : float or None
        Spin exponent; deg V > p is enforced.  ``None`` skips the check and
        disables exponential moments (quadrature self-tests only).
    max_lambda : float
        Largest lam for which exp(lam |u|^p) must be integrable on the grid.
    tol : float
        Target accuracy of the resolved functionals.
    """
    if p is not None and not V.degree > p:
        raise ValueError(f"deg V = {V.degree} not > p = {p:g}")
    if max_lambda < 0:
        raise ValueError("max_lambda must be >= 0")
    if max_lambda > 0 and p is None:
        raise ValueError("exponential moments need p")
    if not tol > 0:
        raise ValueError("tol must be positive")
    U = cutoff if cutoff is not None else _cutoff(V, max_lambda, p)

    panels = 2
    nodes, weights = _composite_grid(U, panels, order)
    feats = _fingerprint(V, nodes, weights, max_lambda, p)
    while True:
        finer = panels * 2
        if finer > max_panels:
            raise RuntimeError(f"quadrature did not reach tol={tol:g} with {max_panels} panels")
        n2, w2 = _composite_grid(U, finer, order)
        f2 = _fingerprint(V, n2, w2, max_lambda, p)
        if np.all(np.abs(f2 - feats) <= tol * np.maximum(1.0, np.abs(f2))):
            break
        panels, nodes, weights, feats = finer, n2, w2, f2

    logw = np.log(weights) - V(nodes)
    logz = float(logsumexp(logw))
    grid = QuadratureGrid(nodes, weights, U, 2 * panels, order)
    return SingleSpinMeasure(V, math.exp(logz), grid, logw - logz, p, float(max_lambda), tol)


def _check_lambda(m: SingleSpinMeasure, lam: float, p: float):
    if m.p is None:
        raise ValueError("measure was built without an exponent p")
    if lam > m.max_lambda * (1 + 1e-12):
        raise ValueError(f"lambda={lam:g} exceeds grid validity (max_lambda={m.max_lambda:g})")


def c_plus(m: SingleSpinMeasure, lam: float, p: float | None = None) -> float:
    """Integral of exp(lam |u|^p) d chi."""
    p = m.p if p is None else p
    _check_lambda(m, lam, p)
    return math.exp(m.log_exp_moment(lam, p))


def c_minus(m: SingleSpinMeasure, lam: float, p: float | None = None) -> float:
    """Integral of exp(-lam |u|^p) d chi, in (0, 1] for lam >= 0."""
    if lam < 0:
        raise ValueError("lambda must be >= 0")
    p = m.p if p is None else p
    return math.exp(m.log_exp_moment(-lam, p))


def one_point_constant(m: SingleSpinMeasure, lam: float, kappa: float, d: int,
                       p: float | None = None) -> float:
    """log C+(lam + 2 d kappa) - log C-(2 d kappa)."""
    if lam <= 0 or kappa <= 0:
        raise ValueError("lambda and kappa must be positive")
    p = m.p if p is None else p
    _check_lambda(m, lam + 2 * d * kappa, p)
    return m.log_exp_moment(lam + 2 * d * kappa, p) - m.log_exp_moment(-2 * d * kappa, p)


def default_potential() -> Potential:
    return Potential.monomial(6)
