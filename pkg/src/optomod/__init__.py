"""Asymptotic Gaussian states of a modulated optomechanical cavity."""
from .classical import MeanState, PeriodicOrbit, find_periodic_orbit, fixed_point_unmodulated
from .covariance import (CovOrbit, StabilityReport, routh_hurwitz_stable,
                         steady_periodic_covariance, symplectic_eigenvalues)
from .errors import (ConfigError, InstabilityError, InvalidParameterError, NonConvergenceError,
                     OptomodError)
from .kernels import BACKEND_NAME
from .metrics import (MetricsSummary, gaussian_discord, logarithmic_negativity,
                      min_quadrature_variance, period_extrema, phonon_number)
from .params import Config, DerivedParams, ModulationSpec, SystemParams, derive, load_config, reference_system
from .perturbative import classical_orders, covariance_orders
from .series import HarmonicSeries

__version__ = "0.1.0"

__all__ = [
    "BACKEND_NAME", "Config", "ConfigError", "CovOrbit", "DerivedParams", "HarmonicSeries",
    "InstabilityError", "InvalidParameterError", "MeanState", "MetricsSummary", "ModulationSpec",
    "NonConvergenceError", "OptomodError", "PeriodicOrbit", "StabilityReport", "SystemParams",
    "classical_orders", "covariance_orders", "derive", "find_periodic_orbit",
    "fixed_point_unmodulated", "gaussian_discord", "load_config", "logarithmic_negativity",
    "min_quadrature_variance", "reference_system", "period_extrema", "phonon_number",
    "routh_hurwitz_stable", "steady_periodic_covariance", "symplectic_eigenvalues",
]
