"""Forward/backward transfer operator for regions that are simple paths."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import logsumexp

from .model import GibbsEstimate, GibbsSpec, Observable


@dataclass(frozen=True)
class _Sweep:
    order: list[int]          # region indices along the path
    log_a: np.ndarray         # (T, n) forward messages, including the site's own factor
    log_b: np.ndarray         # (T, n) backward messages, excluding it
    log_site: np.ndarray      # (T, n) log chi + h u at each path position
    couplings: np.ndarray     # (T - 1,) J along consecutive path edges
    log_z: float


def _path_couplings(spec: GibbsSpec, order: list[int]) -> np.ndarray:
    lookup = {(int(i), int(j)): J for (i, j), J in zip(spec.pairs, spec.j_interior)}
    lookup.update({(j, i): J for (i, j), J in list(lookup.items())})
    return np.array([lookup[(a, b)] for a, b in zip(order[:-1], order[1:])])


def _sweep(spec: GibbsSpec) -> _Sweep:
    order = spec.region.chain_order()
    if order is None:
        raise ValueError("transfer engine needs a region that is a simple path")
    m = spec.single_spin
    u = m.nodes
    T = len(order)
    log_site = m.log_probs[None, :] + spec.external_field[order][:, None] * u[None, :]
    J = _path_couplings(spec, order)
    uu = np.outer(u, u)
    log_a = np.empty((T, u.size))
    log_b = np.zeros((T, u.size))
    log_a[0] = log_site[0]
    for t in range(T - 1):
        log_a[t + 1] = logsumexp(log_a[t][:, None] + J[t] * uu, axis=0) + log_site[t + 1]
    for t in range(T - 2, -1, -1):
        log_b[t] = logsumexp(J[t] * uu + (log_site[t + 1] + log_b[t + 1])[None, :], axis=1)
    return _Sweep(order, log_a, log_b, log_site, J, float(logsumexp(log_a[-1])))


def transfer_log_partition(spec: GibbsSpec) -> float:
    """log Z for a path region; forward pass only."""
    order = spec.region.chain_order()
    if order is None:
        raise ValueError("transfer engine needs a region that is a simple path")
    m = spec.single_spin
    u = m.nodes
    log_site = m.log_probs[None, :] + spec.external_field[order][:, None] * u[None, :]
    J = _path_couplings(spec, order)
    uu = np.outer(u, u)
    a = log_site[0]
    for t in range(len(order) - 1):
        a = logsumexp(a[:, None] + J[t] * uu, axis=0) + log_site[t + 1]
    return float(logsumexp(a))


def _expect(sw: _Sweep, spec: GibbsSpec, obs: Observable) -> float:
    u = spec.single_spin.nodes
    pos = {idx: t for t, idx in enumerate(sw.order)}
    ts = [pos[spec.region.index(x)] for x in obs.support]
    if len(ts) == 1:
        t = ts[0]
        p = np.exp(sw.log_a[t] + sw.log_b[t] - sw.log_z)
        return float(p @ obs(u[:, None]))
    if len(ts) == 2 and abs(ts[0] - ts[1]) == 1:
        t = min(ts)
        lp = (sw.log_a[t][:, None] + sw.couplings[t] * np.outer(u, u)
              + (sw.log_site[t + 1] + sw.log_b[t + 1])[None, :] - sw.log_z)
        first, second = np.meshgrid(u, u, indexing="ij")
        cols = (first, second) if ts[0] < ts[1] else (second, first)
        vals = obs(np.stack([c.ravel() for c in cols], axis=1)).reshape(lp.shape)
        return float(np.sum(np.exp(lp) * vals))
    raise ValueError(f"observable {obs.name!r} must depend on one site or two adjacent sites")


def transfer_kernel(spec: GibbsSpec, observables: Sequence[Observable] = ()
                    ) -> tuple[float, list[GibbsEstimate]]:
    """Z and single-site / adjacent-pair expectations in O(|Delta| n^2)."""
    sw = _sweep(spec)
    n = spec.single_spin.size
    est = [GibbsEstimate(o.name, _expect(sw, spec, o), 0.0, "transfer", n * len(sw.order))
           for o in observables]
    z = math.exp(sw.log_z) if sw.log_z < 709 else math.inf
    return z, est


def transfer_log_partition_with(spec: GibbsSpec, observables: Sequence[Observable]
                                ) -> tuple[float, np.ndarray]:
    """log Z together with expectation values, from a single sweep."""
    sw = _sweep(spec)
    return sw.log_z, np.array([_expect(sw, spec, o) for o in observables])
