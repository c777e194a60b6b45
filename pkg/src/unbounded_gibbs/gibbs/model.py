"""Finite-volume Gibbs specification: energy, observables, estimates."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from ..lattice import Region, Site
from ..single_spin import SingleSpinMeasure
from ..weights import CouplingField, ModelExponents, SpinConfig, WeightFunction


@dataclass(frozen=True, eq=False)
class Model:
    """Everything that does not change between regions or disorder samples."""

    single_spin: SingleSpinMeasure
    exponents: ModelExponents
    weight: WeightFunction

    @property
    def d(self) -> int:
        return self.weight.d

    @property
    def p(self) -> float:
        return self.exponents.p

    @property
    def q(self) -> float:
        return self.exponents.q

    def spec(self, region: Region, couplings: CouplingField,
             xi: SpinConfig | None = None) -> "GibbsSpec":
        if region.d != self.d:
            raise ValueError(f"region dimension {region.d} != model dimension {self.d}")
        bc = SpinConfig({y: (xi or {}).get(y, 0.0) for y in region.boundary})
        return GibbsSpec(region, couplings, bc, self.single_spin, self.exponents, self.weight)


@dataclass(frozen=True, eq=False)
class GibbsSpec:
    """pi_Delta(. | J, xi): region, couplings on its edges, boundary spins."""

    region: Region
    couplings: CouplingField
    boundary_condition: SpinConfig
    single_spin: SingleSpinMeasure
    exponents: ModelExponents
    weight: WeightFunction
    _arrays: tuple = field(default=None, repr=False)

    def __post_init__(self):
        j_in, j_cross = self.couplings.arrays(self.region)
        missing = [y for y in self.region.boundary if y not in self.boundary_condition]
        if missing:
            raise KeyError(f"boundary condition misses sites {missing[:3]}")
        xi = self.boundary_condition.on_boundary(self.region)
        cross = np.asarray(self.region.cross_edges, dtype=np.int64).reshape(-1, 2)
        field_ = np.zeros(len(self.region))
        np.add.at(field_, cross[:, 0], j_cross * xi[cross[:, 1]])
        pairs = np.asarray(self.region.interior_edges, dtype=np.int64).reshape(-1, 2)
        object.__setattr__(self, "_arrays", (j_in, j_cross, xi, field_, pairs, cross))

    @property
    def model(self) -> Model:
        return Model(self.single_spin, self.exponents, self.weight)

    @property
    def j_interior(self) -> np.ndarray:
        return self._arrays[0]

    @property
    def j_cross(self) -> np.ndarray:
        return self._arrays[1]

    @property
    def xi(self) -> np.ndarray:
        return self._arrays[2]

    @property
    def external_field(self) -> np.ndarray:
        """h_x = sum over boundary neighbours y of J_xy xi(y)."""
        return self._arrays[3]

    @property
    def pairs(self) -> np.ndarray:
        return self._arrays[4]

    @property
    def cross(self) -> np.ndarray:
        return self._arrays[5]

    def minus_energy(self, sigma: np.ndarray) -> np.ndarray:
        """-H for inner spin arrays of shape (..., |Delta|)."""
        s = np.asarray(sigma, dtype=float)
        out = s @ self.external_field
        if len(self.pairs):
            out = out + (s[..., self.pairs[:, 0]] * s[..., self.pairs[:, 1]]) @ self.j_interior
        return out

    def with_couplings(self, couplings: CouplingField) -> "GibbsSpec":
        return replace(self, couplings=couplings, _arrays=None)

    def scaled(self, t: float) -> "GibbsSpec":
        return self.with_couplings(self.couplings.restrict(self.region).scaled(t))

    def with_boundary(self, xi: SpinConfig) -> "GibbsSpec":
        bc = SpinConfig({y: xi.get(y, 0.0) for y in self.region.boundary})
        return replace(self, boundary_condition=bc, _arrays=None)


def _as_inner_array(spec: GibbsSpec, sigma) -> np.ndarray:
    if isinstance(sigma, dict):
        missing = [x for x in spec.region.sites if x not in sigma]
        if missing:
            raise KeyError(f"spin configuration misses sites {missing[:3]}")
        return np.array([sigma[x] for x in spec.region.sites], dtype=float)
    return np.asarray(sigma, dtype=float)


def energy(spec: GibbsSpec, sigma) -> np.ndarray | float:
    """H_Delta(sigma | J, xi) = -sum_{E_Delta} J s s - sum_{cross} J s xi.

    ``sigma`` is a SpinConfig covering the region (boundary values come from
    the GibbsSpec) or an array of inner spins with trailing axis |Delta|.
    """
    out = -spec.minus_energy(_as_inner_array(spec, sigma))
    return float(out) if np.ndim(out) == 0 else out


def energy_bound_check(spec: GibbsSpec, sigma) -> tuple[float, float]:
    """|H| and 2d sum|s|^p + 2d sum_boundary |xi|^p + 1/2 sum_x sum_{y~x} |J|^q."""
    s = _as_inner_array(spec, sigma)
    p, q, d = spec.exponents.p, spec.exponents.q, spec.region.d
    lhs = abs(float(energy(spec, s)))
    j_sum = 2 * np.sum(np.abs(spec.j_interior) ** q) + np.sum(np.abs(spec.j_cross) ** q)
    rhs = (2 * d * np.sum(np.abs(s) ** p) + 2 * d * np.sum(np.abs(spec.xi) ** p)
           + 0.5 * j_sum)
    return lhs, float(rhs)


@dataclass(frozen=True)
class Observable:
    """f(sigma) depending on the spins at ``support`` (in that column order).

    ``fn`` maps an array of shape (M, len(support)) to M values.
    """

    name: str
    fn: Callable[[np.ndarray], np.ndarray]
    support: tuple[Site, ...]
    bound: float | None = None
    degree: int | None = None
    family_index: int | None = None

    def __call__(self, values: np.ndarray) -> np.ndarray:
        return np.asarray(self.fn(np.asarray(values, dtype=float)), dtype=float)

    def columns(self, region: Region) -> list[int]:
        return [region.index(x) for x in self.support]


def site_power(x: Sequence[int], k: int) -> Observable:
    x = tuple(x)
    return Observable(f"s{list(x)}^{k}", lambda v: v[:, 0] ** k, (x,), degree=k)


def site_abs_power(x: Sequence[int], p: float) -> Observable:
    x = tuple(x)
    return Observable(f"|s{list(x)}|^{p:g}", lambda v: np.abs(v[:, 0]) ** p, (x,))


def pair_product(x: Sequence[int], y: Sequence[int]) -> Observable:
    x, y = tuple(x), tuple(y)
    return Observable(f"s{list(x)}s{list(y)}", lambda v: v[:, 0] * v[:, 1], (x, y), degree=2)


def pair_product_squared(x: Sequence[int], y: Sequence[int]) -> Observable:
    x, y = tuple(x), tuple(y)
    return Observable(f"(s{list(x)}s{list(y)})^2", lambda v: (v[:, 0] * v[:, 1]) ** 2,
                      (x, y), degree=4)


def bounded_site(x: Sequence[int], kind: str = "tanh") -> Observable:
    """Bounded continuous single-site functions: tanh, cos, or a bump."""
    x = tuple(x)
    fns = {"tanh": np.tanh, "cos": np.cos, "bump": lambda u: 1.0 / (1.0 + u * u)}
    f = fns[kind]
    return Observable(f"{kind}(s{list(x)})", lambda v: f(v[:, 0]), (x,), bound=1.0)


def bounded_pair(x: Sequence[int], y: Sequence[int]) -> Observable:
    x, y = tuple(x), tuple(y)
    return Observable(f"tanh(s{list(x)}s{list(y)})", lambda v: np.tanh(v[:, 0] * v[:, 1]),
                      (x, y), bound=1.0)


def moment_observables(region: Region) -> list[Observable]:
    """First and second moments: s_x, s_x^2 and s_x s_y on interior edges."""
    obs = [site_power(x, 1) for x in region.sites]
    obs += [site_power(x, 2) for x in region.sites]
    obs += [pair_product(region.sites[i], region.sites[j]) for i, j in region.interior_edges]
    return obs


def separating_family(sites: Sequence[Site], edges: Sequence[tuple[Site, Site]] = ()) -> list[Observable]:
    """A finite slice of a countable separating family of bounded observables."""
    obs = []
    for x in sites:
        obs += [bounded_site(x, "tanh"), bounded_site(x, "cos"), bounded_site(x, "bump")]
    obs += [bounded_pair(x, y) for x, y in edges]
    return [replace(o, family_index=i) for i, o in enumerate(obs)]


@dataclass(frozen=True)
class GibbsEstimate:
    observable: str
    value: float
    std_error: float
    engine: str
    n_samples: int

    def row(self) -> dict:
        return {"observable": self.observable, "value": self.value,
                "std_error": self.std_error, "engine": self.engine,
                "n_samples": self.n_samples}
