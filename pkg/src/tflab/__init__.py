"""Numerical laboratory for time-frequency analysis of oscillatory-integral operators.

The package builds Gabor frames on truncated lattices, assembles Gabor
matrices of Fourier integral and pseudodifferential operators by independent
routes, measures the weighted decay of the matrices along the graph of the
canonical transformation, and runs finite-scale compactness diagnostics
cross-checked against finite-section singular values.
"""

__version__ = "0.1.0"

from tflab.config import Thresholds
from tflab.weights import WeightSpec, polynomial_weight, weight_eval
from tflab.lattices import Lattice, TruncatedLattice, FundamentalDomain, build_lattice
from tflab.signals import SampledSignal, fourier, tf_shift, gaussian_window

__all__ = [
    "Thresholds",
    "WeightSpec",
    "polynomial_weight",
    "weight_eval",
    "Lattice",
    "TruncatedLattice",
    "FundamentalDomain",
    "build_lattice",
    "SampledSignal",
    "fourier",
    "tf_shift",
    "gaussian_window",
    "__version__",
]
