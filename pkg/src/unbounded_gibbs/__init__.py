"""Disordered lattice spin systems with unbounded spins and couplings.

Finite-volume Gibbs kernels on Z^d with a polynomial single-spin law,
Gaussian random couplings, numerical checks of the a-priori bounds, and
disorder thermodynamics (pressures, interpolation, Cesaro averages).
"""

from .disorder import DisorderLaw, a_nu, sample_couplings, sample_ensemble
from .gibbs import (GibbsEstimate, GibbsSpec, Model, Observable, dlr_check, energy,
                    energy_bound_check, exact_kernel, log_partition, mcmc_kernel, transfer_kernel)
from .lattice import Region, RegionSequence, cofinal_boxes, make_box, make_chain, van_hove_ratio
from .single_spin import Potential, SingleSpinMeasure, build_measure, c_minus, c_plus, default_potential
from .weights import (CouplingField, ModelExponents, SpinConfig, WeightFunction, exponents, norm_p,
                      norm_q, young_bound)

__all__ = [
    "CouplingField", "DisorderLaw", "GibbsEstimate", "GibbsSpec", "Model", "ModelExponents",
    "Observable", "Potential", "Region", "RegionSequence", "SingleSpinMeasure", "SpinConfig",
    "WeightFunction", "a_nu", "build_measure", "c_minus", "c_plus", "cofinal_boxes",
    "default_potential", "dlr_check", "energy", "energy_bound_check", "exact_kernel", "exponents",
    "log_partition", "make_box", "make_chain", "mcmc_kernel", "norm_p", "norm_q", "sample_couplings",
    "sample_ensemble", "transfer_kernel", "van_hove_ratio", "young_bound",
]
