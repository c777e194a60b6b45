"""Finite-volume Gibbs kernels and their three engines."""

from __future__ import annotations

import csv
import warnings
from typing import Iterable

from .mcmc import (ChainResult, IntegrationResult, SamplerWarning, batch_means, mcmc_kernel,
                   run_chain, thermodynamic_integration)
from .model import (GibbsEstimate, GibbsSpec, Model, Observable, bounded_pair, bounded_site,
                    energy, energy_bound_check, moment_observables, pair_product,
                    pair_product_squared, separating_family, site_abs_power, site_power)
from .quadrature import MAX_SITES, dlr_check, exact_kernel, exact_log_partition, tensor_expectations
from .transfer import transfer_kernel, transfer_log_partition, transfer_log_partition_with

__all__ = [
    "ChainResult", "ENGINES", "ESTIMATE_COLUMNS", "GibbsEstimate", "GibbsSpec", "IntegrationResult",
    "MAX_SITES", "Model", "Observable", "SamplerWarning", "batch_means", "bounded_pair",
    "bounded_site", "choose_engine", "dlr_check", "energy", "energy_bound_check", "exact_kernel",
    "exact_log_partition", "log_partition", "log_partition_estimate", "mcmc_kernel",
    "moment_observables", "pair_product", "pair_product_squared", "read_estimates", "run_chain",
    "separating_family", "site_abs_power", "site_power", "tensor_expectations",
    "thermodynamic_integration", "transfer_kernel", "transfer_log_partition",
    "transfer_log_partition_with", "write_estimates",
]

ENGINES = ("quadrature", "transfer", "mcmc")
ESTIMATE_COLUMNS = ("run_id", "region_hash", "J_seed", "engine", "observable", "value",
                    "std_error", "n_samples")


def choose_engine(spec: GibbsSpec, max_sites: int = MAX_SITES) -> str:
    if spec.region.chain_order() is not None:
        return "transfer"
    if len(spec.region) <= max_sites:
        return "quadrature"
    return "mcmc"


def log_partition(spec: GibbsSpec, engine: str = "auto", **ti_options) -> float:
    """log Z_Delta(J, xi).

    ``engine="mcmc"`` integrates thermodynamically; its standard error is
    available from :func:`log_partition_estimate`.
    """
    return log_partition_estimate(spec, engine, **ti_options).value


def log_partition_estimate(spec: GibbsSpec, engine: str = "auto", **ti_options) -> GibbsEstimate:
    if engine == "auto":
        engine = choose_engine(spec)
    if engine == "quadrature":
        n = spec.single_spin.size ** len(spec.region)
        return GibbsEstimate("log_Z", exact_log_partition(spec), 0.0, engine, n)
    if engine == "transfer":
        n = spec.single_spin.size * len(spec.region)
        return GibbsEstimate("log_Z", transfer_log_partition(spec), 0.0, engine, n)
    if engine == "mcmc":
        res = thermodynamic_integration(spec, **ti_options)
        if res.flagged:
            warnings.warn("Simpson refinement moved log Z by more than the MC error; "
                          "refine the t-grid", SamplerWarning, stacklevel=2)
        return res.estimate
    raise ValueError(f"unknown engine {engine!r}; expected one of {ENGINES} or 'auto'")


def write_estimates(path, rows: Iterable[dict]) -> int:
    """Write estimate rows (dicts with ESTIMATE_COLUMNS keys) to CSV."""
    n = 0
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=ESTIMATE_COLUMNS)
        writer.writeheader()
        for r in rows:
            writer.writerow({k: r[k] for k in ESTIMATE_COLUMNS})
            n += 1
    return n


def read_estimates(path) -> list[dict]:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    for r in rows:
        r["value"] = float(r["value"])
        r["std_error"] = float(r["std_error"])
        r["n_samples"] = int(r["n_samples"])
    return rows
