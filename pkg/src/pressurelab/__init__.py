"""Topological pressure, equilibrium states and large deviations for smooth
maps on flat tori, estimated from weighted volume growth and checked against
transfer-operator and closed-form values."""

__version__ = "0.1.0"

from .cocycle import CocycleSpectrum, cocycle_spectrum, log_wedge_norm
from .empirical import EmpiricalMeasure, birkhoff_sum, empirical_measure, moments, orbit
from .equilibrium import (
    WeightedEnsemble,
    build_ensemble,
    concentration_mass,
    ensemble_moments,
    equilibrium_histogram,
    invariance_defect,
)
from .ldp import (
    ConstraintSet,
    LdpEstimate,
    RateFunctionTable,
    contraction_report,
    estimate_nu_n,
    rate_function,
)
from .manifold import (
    HistogramMeasure,
    Point,
    TestFunctionBasis,
    basis_for,
    histogram,
    sample_uniform,
    tail_bound,
    weak_distance,
)
from .oracle import (
    TransferOperatorModel,
    build_operator,
    oracle_entropy,
    oracle_gibbs_moments,
    oracle_pressure,
)
from .pressure import PressureEstimate, estimate_pressure, log_Zn, q_functional
from .systems import (
    InvalidSystemError,
    Potential,
    SmoothSystem,
    MalformedPotentialError,
    jacobian_selfcheck,
    make_cat_map,
    make_doubling,
    make_expanding_circle,
    make_potential,
    make_torus_endomorphism,
)
