"""Exponential weight, tempered norms of spins and couplings, Young's bound."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .lattice import Edge, Region, Site, edge_key


@dataclass(frozen=True)
class WeightFunction:
    """w(x) = exp(-alpha * |x|_1) on Z^d."""

    alpha: float
    d: int

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError("alpha must be positive")
        if self.d < 1:
            raise ValueError("d must be >= 1")

    @property
    def w0(self) -> float:
        # tight constant in w(x) <= w0 w(y) for neighbours
        return math.exp(self.alpha)

    @property
    def total_mass(self) -> float:
        r = math.exp(-self.alpha)
        return ((1 + r) / (1 - r)) ** self.d

    def __call__(self, x) -> np.ndarray | float:
        arr = np.asarray(x, dtype=float)
        if arr.shape[-1] != self.d:
            raise ValueError(f"expected sites of dimension {self.d}")
        out = np.exp(-self.alpha * np.abs(arr).sum(axis=-1))
        return float(out) if out.ndim == 0 else out


def weight_at(w: WeightFunction, x: Sequence[int]) -> float:
    return float(w(x))


@dataclass(frozen=True)
class ModelExponents:
    q: float
    p: float


def exponents(q: float) -> ModelExponents:
    """Pair the coupling exponent q > 1 with the spin exponent p = 2q/(q-1)."""
    if not q > 1:
        raise ValueError("q must exceed 1")
    return ModelExponents(q=float(q), p=2.0 * q / (q - 1.0))


class SpinConfig(dict):
    """Site -> spin value, usually covering a region and its boundary."""

    @classmethod
    def from_arrays(cls, region: Region, sigma=None, xi=None) -> "SpinConfig":
        cfg = cls()
        if sigma is not None:
            cfg.update(zip(region.sites, map(float, np.ravel(sigma))))
        if xi is not None:
            cfg.update(zip(region.boundary, map(float, np.ravel(xi))))
        return cfg

    def inside(self, region: Region) -> np.ndarray:
        return np.array([self.get(s, 0.0) for s in region.sites], dtype=float)

    def on_boundary(self, region: Region) -> np.ndarray:
        return np.array([self.get(s, 0.0) for s in region.boundary], dtype=float)


class CouplingField(dict):
    """Canonical edge key -> J_xy."""

    @classmethod
    def from_pairs(cls, pairs: Mapping) -> "CouplingField":
        return cls({edge_key(*k): float(v) for k, v in pairs.items()})

    @classmethod
    def constant(cls, region: Region, value: float) -> "CouplingField":
        return cls({e: float(value) for e in region.edge_keys()})

    def arrays(self, region: Region) -> tuple[np.ndarray, np.ndarray]:
        """(interior, cross) coupling arrays in the region's edge order."""
        try:
            inner = np.array([self[e] for e in region.interior_edge_keys()], dtype=float)
            cross = np.array([self[e] for e in region.cross_edge_keys()], dtype=float)
        except KeyError as exc:
            raise KeyError(f"no coupling for edge {exc.args[0]}") from None
        return inner, cross

    def restrict(self, region: Region) -> "CouplingField":
        return CouplingField({e: self[e] for e in region.edge_keys()})

    def scaled(self, factor: float) -> "CouplingField":
        return CouplingField({e: factor * v for e, v in self.items()})

    def __neg__(self) -> "CouplingField":
        return self.scaled(-1.0)


def norm_p(sigma: Mapping[Site, float], w: WeightFunction, p: float) -> float:
    """(sum_x |sigma(x)|^p w(x))^(1/p) over the configuration's domain."""
    if p < 1:
        raise ValueError("p must be >= 1")
    if not sigma:
        return 0.0
    sites = np.array(list(sigma.keys()), dtype=float)
    vals = np.abs(np.fromiter(sigma.values(), dtype=float))
    return float((vals ** p @ w(sites)) ** (1.0 / p))


def norm_q(J: Mapping[Edge, float], w: WeightFunction, q: float) -> float:
    """(sum_<xy> |J_xy|^q [w(x) + w(y)])^(1/q) over the field's edges."""
    if q < 1:
        raise ValueError("q must be >= 1")
    if not J:
        return 0.0
    a = np.array([e[0] for e in J], dtype=float)
    b = np.array([e[1] for e in J], dtype=float)
    vals = np.abs(np.fromiter(J.values(), dtype=float))
    return float((vals ** q @ (w(a) + w(b))) ** (1.0 / q))


def young_constant(p: float) -> float:
    """(p - 2) p^{-p/(p-2)}; equals 2 (q-1)^{q-1} / (2q)^q when p = 2q/(q-1)."""
    return (p - 2.0) * p ** (-p / (p - 2.0))


def young_bound(a, b, c, kappa, p: float):
    """Both sides of abc <= kappa (b^p + c^p) + (p-2) p^{-p/(p-2)} kappa^{-2/(p-2)} a^{p/(p-2)}.

    Vectorised over array arguments.
    """
    if not p > 2:
        raise ValueError("p must exceed 2")
    a, b, c, kappa = (np.asarray(v, dtype=float) for v in (a, b, c, kappa))
    lhs = a * b * c
    rhs = kappa * (b ** p + c ** p) + young_constant(p) * kappa ** (-2.0 / (p - 2.0)) * a ** (p / (p - 2.0))
    if lhs.ndim == 0:
        return float(lhs), float(rhs)
    return lhs, rhs
