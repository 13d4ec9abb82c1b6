"""Decay rates, non-secular master equations, and emission spectra for an
emitter coupled to a lossy cavity mode.

The package covers three connected layers: closed-form decay rates from a
resonance expansion of the field (:mod:`qnmres.continuum`), an equivalent
system-bath description with power-law and phase-corrected spectral
densities (:mod:`qnmres.spectral_density`), and the non-secular
Born-Markov master equation built on the dressed emitter-cavity ladder
(:mod:`qnmres.dressed`, :mod:`qnmres.master_equation`), from which
steady-state emission spectra follow by quantum regression
(:mod:`qnmres.spectra`).
"""

__version__ = "0.1.0"

from .continuum import (
    QnmExpansion,
    RateSweep,
    linearized_ratio,
    lorentzian_envelope,
    multi_mode_rate,
    rate_sweep,
    single_mode_rate,
)
from .core import Gauge, GridSpec, QnmMode, SimConfig, TlsParams, validate
from .dressed import (
    DressedBasis,
    JcSystem,
    analytic_single_excitation,
    diagonalize,
)
from .errors import QnmresError
from .master_equation import (
    Liouvillian,
    Trajectory,
    build_generator,
    decay_eigenvalue,
    evolve,
    gauge_compare,
    perturbative_rate,
    steady_state,
)
from .spectra import (
    CorrelationResult,
    SpectrumResult,
    correlation,
    emission_spectrum,
    strong_coupling_suite,
)
from .spectral_density import (
    NegativeChiPolicy,
    PhaseCorrection,
    SystemBathCoupling,
    phase_factor,
    spectral_density_table,
)

__all__ = [
    "__version__",
    "QnmresError",
    "QnmMode",
    "TlsParams",
    "Gauge",
    "GridSpec",
    "SimConfig",
    "validate",
    "phase_factor",
    "PhaseCorrection",
    "SystemBathCoupling",
    "NegativeChiPolicy",
    "spectral_density_table",
    "QnmExpansion",
    "single_mode_rate",
    "multi_mode_rate",
    "lorentzian_envelope",
    "linearized_ratio",
    "rate_sweep",
    "RateSweep",
    "JcSystem",
    "DressedBasis",
    "analytic_single_excitation",
    "diagonalize",
    "Liouvillian",
    "build_generator",
    "evolve",
    "Trajectory",
    "steady_state",
    "decay_eigenvalue",
    "perturbative_rate",
    "gauge_compare",
    "CorrelationResult",
    "correlation",
    "SpectrumResult",
    "emission_spectrum",
    "strong_coupling_suite",
]
