"""Tensor-product quadrature over the single-spin grid (small regions).

All Boltzmann weights are accumulated in log space with a running maximum,
so neither e^{-H} nor Z has to be representable as a float.
"""

from __future__ import annotations

import math
from typing import Iterator, Sequence

import numpy as np

from ..lattice import Region
from .model import GibbsEstimate, GibbsSpec, Observable

MAX_SITES = 4
_CHUNK = 1 << 20


def _grid_chunks(n: int, k: int) -> Iterator[np.ndarray]:
    """Index arrays (M, k) enumerating {0..n-1}^k in C order, in chunks."""
    if k == 0:
        yield np.zeros((1, 0), dtype=np.int64)
        return
    lead = 0
    while lead < k and n ** (k - lead) > _CHUNK:
        lead += 1
    tail = np.indices((n,) * (k - lead)).reshape(k - lead, -1).T
    for head in np.ndindex(*((n,) * lead)):
        if lead:
            yield np.hstack([np.broadcast_to(np.array(head), (len(tail), lead)), tail])
        else:
            yield tail


class _LogAccumulator:
    """Sum of e^{lw} and e^{lw} f_i with a shifting reference maximum."""

    def __init__(self, n_obs: int):
        self.ref = -math.inf
        self.mass = 0.0
        self.sums = np.zeros(n_obs)

    def add(self, lw: np.ndarray, values: np.ndarray | None = None):
        m = float(lw.max())
        if m > self.ref:
            scale = math.exp(self.ref - m) if self.ref > -math.inf else 0.0
            self.mass *= scale
            self.sums *= scale
            self.ref = m
        e = np.exp(lw - self.ref)
        self.mass += float(e.sum())
        if values is not None and values.size:
            self.sums += values @ e

    @property
    def log_mass(self) -> float:
        return self.ref + math.log(self.mass)

    @property
    def means(self) -> np.ndarray:
        return self.sums / self.mass


def _columns(sig: np.ndarray, c: list[int]) -> np.ndarray:
    # a slice keeps a view; fancy indexing would copy every chunk
    if c and c == list(range(c[0], c[0] + len(c))):
        return sig[:, c[0]:c[0] + len(c)]
    return sig[:, c]


def _evaluate(observables, cols, sig: np.ndarray, out: np.ndarray) -> np.ndarray:
    for i, (o, c) in enumerate(zip(observables, cols)):
        out[i] = o(_columns(sig, c))
    return out


def _check_size(region: Region, max_sites: int):
    if len(region) > max_sites:
        raise ValueError(f"region of {len(region)} sites is too large for tensor quadrature "
                         f"(limit {max_sites})")


def tensor_expectations(spec: GibbsSpec, observables: Sequence[Observable] = (),
                        max_sites: int = MAX_SITES) -> tuple[float, np.ndarray]:
    """(log Z, expectations) by summing over the full product grid."""
    region = spec.region
    _check_size(region, max_sites)
    m = spec.single_spin
    nodes, logp = m.nodes, m.log_probs
    n, k = m.size, len(region)
    cols = [o.columns(region) for o in observables]
    acc = _LogAccumulator(len(observables))
    if k == 0:
        acc.add(np.zeros(1))
        return acc.log_mass, np.full(len(observables), np.nan)

    # The trailing sites are enumerated once; each chunk fixes the leading
    # ("head") sites and only adds the energy terms that touch them.
    lead = 0
    while lead < k and n ** (k - lead) > _CHUNK:
        lead += 1
    tail_idx = np.indices((n,) * (k - lead)).reshape(k - lead, -1).T
    sig = np.empty((len(tail_idx), k), order="F")
    sig[:, lead:] = nodes[tail_idx]
    vals = np.empty((len(observables), len(tail_idx)))
    h, J, pairs = spec.external_field, spec.j_interior, spec.pairs
    head_pair = (pairs < lead).any(axis=1) if len(pairs) else np.zeros(0, dtype=bool)
    base = logp[tail_idx].sum(axis=1) + sig[:, lead:] @ h[lead:]
    for e in np.nonzero(~head_pair)[0]:
        base += J[e] * sig[:, pairs[e, 0]] * sig[:, pairs[e, 1]]
    for head in np.ndindex(*((n,) * lead)):
        lw = base.copy()
        if lead:
            sig[:, :lead] = nodes[list(head)]
            lw += float(logp[list(head)].sum() + nodes[list(head)] @ h[:lead])
            for e in np.nonzero(head_pair)[0]:
                lw += J[e] * sig[:, pairs[e, 0]] * sig[:, pairs[e, 1]]
        acc.add(lw, _evaluate(observables, cols, sig, vals))
    return acc.log_mass, acc.means


def exact_log_partition(spec: GibbsSpec, max_sites: int = MAX_SITES) -> float:
    return tensor_expectations(spec, (), max_sites)[0]


def exact_kernel(spec: GibbsSpec, observables: Sequence[Observable] = (),
                 max_sites: int = MAX_SITES) -> tuple[float, list[GibbsEstimate]]:
    """Z_Delta(J, xi) and pi_Delta(f | J, xi) by tensor quadrature."""
    log_z, means = tensor_expectations(spec, observables, max_sites)
    n = spec.single_spin.size ** len(spec.region)
    z = math.exp(log_z) if log_z < 709 else math.inf
    return z, [GibbsEstimate(o.name, float(v), 0.0, "quadrature", n)
               for o, v in zip(observables, means)]


def _conditional_expectations(outer: GibbsSpec, inner: Region, rest_idx: np.ndarray,
                              inner_pos: list[int], rest_pos: list[int],
                              observables: Sequence[Observable], cols) -> np.ndarray:
    """pi_inner(f | eta) for each outer-rest grid configuration eta (rows of rest_idx).

    The inner kernel is rebuilt from its own Hamiltonian: boundary spins of
    ``inner`` are read from eta (sites of the outer region) or from xi.
    """
    m = outer.single_spin
    nodes, logp = m.nodes, m.log_probs
    o_region = outer.region
    eta = nodes[rest_idx]                                   # (M, |rest|)
    rest_of = {o_region.sites[j]: c for c, j in enumerate(rest_pos)}
    xi_of = dict(zip(o_region.boundary, outer.xi))
    bvals = np.empty((len(eta), len(inner.boundary)))
    for b, y in enumerate(inner.boundary):
        bvals[:, b] = eta[:, rest_of[y]] if y in rest_of else xi_of[y]
    j_in = np.array([outer.couplings[e] for e in inner.interior_edge_keys()])
    j_cr = np.array([outer.couplings[e] for e in inner.cross_edge_keys()])
    pairs = np.asarray(inner.interior_edges, dtype=np.int64).reshape(-1, 2)
    cross = np.asarray(inner.cross_edges, dtype=np.int64).reshape(-1, 2)

    l = len(inner)
    inner_idx = np.indices((m.size,) * l).reshape(l, -1).T    # (G, l)
    s_in = nodes[inner_idx]
    # -H_inner(s | eta) = sum J s s + sum_x s_x h_x(eta)
    h = np.zeros((len(eta), l))
    for c, (i, b) in enumerate(cross):
        h[:, i] += j_cr[c] * bvals[:, b]
    lw = logp[inner_idx].sum(axis=1)[None, :] + h @ s_in.T
    if len(pairs):
        lw = lw + ((s_in[:, pairs[:, 0]] * s_in[:, pairs[:, 1]]) @ j_in)[None, :]
    lw -= lw.max(axis=1, keepdims=True)
    wts = np.exp(lw)
    wts /= wts.sum(axis=1, keepdims=True)                   # (M, G)

    full = np.empty((len(eta), len(s_in), len(o_region)))
    full[:, :, rest_pos] = eta[:, None, :]
    full[:, :, inner_pos] = s_in[None, :, :]
    flat = full.reshape(-1, len(o_region))
    out = np.empty((len(eta), len(observables)))
    for k, (o, c) in enumerate(zip(observables, cols)):
        out[:, k] = (o(flat[:, c]).reshape(len(eta), -1) * wts).sum(axis=1)
    return out


def dlr_check(outer: GibbsSpec, inner_region: Region, observables: Sequence[Observable],
              max_sites: int = MAX_SITES) -> float:
    """max_f | pi_Delta(f) - integral of pi_Lambda(f | eta) pi_Delta(d eta) |."""
    o_region = outer.region
    if not inner_region.issubset(o_region):
        raise ValueError("inner region must be contained in the outer region")
    _check_size(o_region, max_sites)
    m = outer.single_spin
    n, k = m.size, len(o_region)
    inner_pos = [o_region.index(x) for x in inner_region.sites]
    rest_pos = [j for j in range(k) if j not in inner_pos]
    cols = [o.columns(o_region) for o in observables]

    _, direct = tensor_expectations(outer, observables, max_sites)

    # g(eta) on the grid of the outer-rest sites, in C order of rest_pos
    n_rest = n ** len(rest_pos)
    g = np.empty((n_rest, len(observables)))
    if rest_pos:
        rest_all = np.indices((n,) * len(rest_pos)).reshape(len(rest_pos), -1).T
    else:
        rest_all = np.zeros((1, 0), dtype=np.int64)   # inner == outer: one empty eta
    batch = max(1, _CHUNK // (n ** len(inner_pos) * max(1, k)))
    for start in range(0, n_rest, batch):
        sl = slice(start, start + batch)
        g[sl] = _conditional_expectations(outer, inner_region, rest_all[sl],
                                          inner_pos, rest_pos, observables, cols)

    acc = _LogAccumulator(len(observables))
    strides = n ** np.arange(len(rest_pos) - 1, -1, -1)
    for idx in _grid_chunks(n, k):
        lw = m.log_probs[idx].sum(axis=1) + outer.minus_energy(m.nodes[idx])
        flat = idx[:, rest_pos] @ strides if rest_pos else np.zeros(len(idx), dtype=np.int64)
        acc.add(lw, g[flat].T)
    return float(np.max(np.abs(direct - acc.means))) if observables else 0.0
