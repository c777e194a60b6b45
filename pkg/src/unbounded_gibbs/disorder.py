"""Random couplings: i.i.d. centred Gaussian law on edges, seeded per edge.

Every coupling is drawn from its own counter-based stream keyed by
``(master seed, realization, edge coordinates)``.  Enlarging a region
therefore extends a realization instead of reshuffling it, and the result
does not depend on the order or the thread in which edges are visited.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .lattice import Edge, Region
from .weights import CouplingField


@dataclass(frozen=True)
class DisorderLaw:
    scale: float
    q: float = 2.0
    family: str = "gaussian_iid"

    def __post_init__(self):
        if self.family != "gaussian_iid":
            raise ValueError(f"unsupported disorder family {self.family!r}")
        if self.scale < 0:
            raise ValueError("scale must be >= 0")
        if self.q < 1:
            raise ValueError("q must be >= 1")


def a_nu(law: DisorderLaw) -> float:
    """E|J_xy|^q for J_xy ~ N(0, s^2): s^q 2^{q/2} Gamma((q+1)/2) / sqrt(pi)."""
    s, q = law.scale, law.q
    return s ** q * 2 ** (q / 2) * math.gamma((q + 1) / 2) / math.sqrt(math.pi)


def _zigzag(n: int) -> int:
    return 2 * n if n >= 0 else -2 * n - 1


def _edge_spawn_key(realization: int, e: Edge) -> tuple[int, ...]:
    a, b = e
    return (int(realization), len(a), *(_zigzag(c) for c in a), *(_zigzag(c) for c in b))


def standard_normal_at(seed: int, realization: int, e: Edge) -> float:
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=_edge_spawn_key(realization, e))
    return float(np.random.Generator(np.random.Philox(ss)).standard_normal())


def sample_couplings(law: DisorderLaw, region: Region, seed: int,
                     realization: int = 0) -> CouplingField:
    """Couplings on every edge touching ``region`` for one disorder sample."""
    if law.scale == 0:
        return CouplingField({e: 0.0 for e in region.edge_keys()})
    return CouplingField({e: law.scale * standard_normal_at(seed, realization, e)
                          for e in region.edge_keys()})


@dataclass
class DisorderEnsemble:
    law: DisorderLaw
    seed: int
    region: Region
    realizations: list[CouplingField] = field(default_factory=list)

    def __len__(self):
        return len(self.realizations)

    def __iter__(self):
        return iter(self.realizations)

    def manifest(self) -> dict:
        return {"law": asdict(self.law), "seed": self.seed,
                "n_realizations": len(self.realizations),
                "region_hash": self.region.digest()}

    def manifest_json(self) -> str:
        return json.dumps(self.manifest(), sort_keys=True)


def sample_ensemble(law: DisorderLaw, region: Region, seed: int, n: int,
                    antithetic: bool = False) -> DisorderEnsemble:
    """``n`` independent realizations; with ``antithetic`` each J is followed by -J."""
    fields = []
    for r in range(n):
        J = sample_couplings(law, region, seed, r)
        fields.append(J)
        if antithetic:
            fields.append(-J)
    return DisorderEnsemble(law, seed, region, fields)


def ensemble_digest(fields) -> str:
    h = hashlib.sha256()
    for J in fields:
        for e in sorted(J):
            h.update(repr((e, J[e])).encode())
    return h.hexdigest()[:16]
