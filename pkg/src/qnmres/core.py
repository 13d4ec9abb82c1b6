"""Parameter records and validation.

All frequencies and rates are dimensionless, expressed in units of one
reference frequency (the cavity resonance, ``omega_c = 1``, unless a config
declares another value).  Every record is immutable after validation, so a
value that exists cannot be invalid.
"""

import dataclasses
import enum
import math

import numpy as np

from .errors import (
    BadGrid,
    NonPositiveFrequency,
    NonPositiveLinewidth,
    OverdampedMode,
    ValidationError,
)


def reduce_phase(phi: float) -> float:
    """Map a mode phase onto (-pi/2, pi/2].

    Every observable in the package depends on the phase through cos(2*phi)
    and sin(2*phi), so the physics has period pi in phi.
    """
    phi = float(phi)
    if not math.isfinite(phi):
        raise ValidationError(f"mode phase must be finite, got {phi!r}")
    red = math.fmod(phi, math.pi)
    if red <= -0.5 * math.pi:
        red += math.pi
    elif red > 0.5 * math.pi:
        red -= math.pi
    return red


@dataclasses.dataclass(frozen=True)
class QnmMode:
    """One cavity resonance reduced to four scalars.

    Parameters
    ----------
    omega : float
        Resonance frequency, > 0.
    kappa : float
        Full linewidth (photon decay rate), > 0.
    g : float
        Dipole-gauge coupling magnitude to the emitter, >= 0.
    phi : float
        Mode phase at the emitter location.  Stored reduced to
        (-pi/2, pi/2]; zero for a lossless (real-valued) mode.
    """

    omega: float
    kappa: float
    g: float
    phi: float = 0.0

    def __post_init__(self):
        if not self.omega > 0.0:
            raise NonPositiveFrequency(f"mode frequency must be > 0, got {self.omega!r}")
        if not self.kappa > 0.0:
            raise NonPositiveLinewidth(f"mode linewidth must be > 0, got {self.kappa!r}")
        if not self.g >= 0.0:
            raise ValidationError(f"coupling magnitude must be >= 0, got {self.g!r}")
        if not self.omega / self.kappa > 0.5:
            raise OverdampedMode(
                f"quality factor {self.omega / self.kappa!r} is not above 1/2"
            )
        object.__setattr__(self, "phi", reduce_phase(self.phi))

    @property
    def q_factor(self) -> float:
        return self.omega / self.kappa

    @property
    def pole(self) -> complex:
        """Complex resonance frequency omega - i*kappa/2 (lower half plane)."""
        return complex(self.omega, -0.5 * self.kappa)


@dataclasses.dataclass(frozen=True)
class TlsParams:
    """Two-level emitter with transition frequency ``omega_0`` > 0."""

    omega_0: float

    def __post_init__(self):
        if not self.omega_0 > 0.0:
            raise NonPositiveFrequency(
                f"emitter frequency must be > 0, got {self.omega_0!r}"
            )

    @classmethod
    def from_detuning(cls, delta: float, omega_c: float) -> "TlsParams":
        return cls(omega_c + delta)

    def detuning(self, omega_c: float) -> float:
        return self.omega_0 - omega_c


class Gauge(enum.Enum):
    """Light-matter coupling convention.

    The two gauges share the dipole-gauge magnitude ``g_d``; in the Coulomb
    gauge the coupling picks up the ratio of emitter to cavity frequency.
    """

    DIPOLE = "dipole"
    COULOMB = "coulomb"

    def coupling(self, g_d: float, omega_0: float, omega_c: float) -> float:
        if not omega_0 > 0.0:
            raise NonPositiveFrequency(f"omega_0 must be > 0, got {omega_0!r}")
        if not omega_c > 0.0:
            raise NonPositiveFrequency(f"omega_c must be > 0, got {omega_c!r}")
        if self is Gauge.DIPOLE:
            return g_d
        return g_d * (omega_0 / omega_c)


@dataclasses.dataclass(frozen=True)
class GridSpec:
    """Uniform frequency grid for sweeps: ``count`` points over [lo, hi]."""

    lo: float
    hi: float
    count: int

    def __post_init__(self):
        if not (math.isfinite(self.lo) and math.isfinite(self.hi)):
            raise BadGrid(f"grid bounds must be finite, got [{self.lo!r}, {self.hi!r}]")
        if not self.hi > self.lo:
            raise BadGrid(f"grid needs hi > lo, got [{self.lo!r}, {self.hi!r}]")
        if int(self.count) != self.count or self.count < 2:
            raise BadGrid(f"grid needs an integer count >= 2, got {self.count!r}")
        object.__setattr__(self, "count", int(self.count))

    def values(self) -> np.ndarray:
        return np.linspace(self.lo, self.hi, self.count)


@dataclasses.dataclass(frozen=True)
class SimConfig:
    """Runtime controls for propagation, steady states, and sweeps."""

    fock_cutoff: int = 3
    pump_rate: float = 0.0
    tolerance: float = 1e-10
    t_max: float = 4000.0
    sweep: GridSpec = GridSpec(0.5, 1.5, 1001)

    def __post_init__(self):
        if int(self.fock_cutoff) != self.fock_cutoff or self.fock_cutoff < 1:
            raise ValidationError(
                f"fock_cutoff must be an integer >= 1, got {self.fock_cutoff!r}"
            )
        object.__setattr__(self, "fock_cutoff", int(self.fock_cutoff))
        if not self.pump_rate >= 0.0:
            raise ValidationError(f"pump_rate must be >= 0, got {self.pump_rate!r}")
        if not self.tolerance > 0.0:
            raise ValidationError(f"tolerance must be > 0, got {self.tolerance!r}")
        if not self.t_max > 0.0:
            raise ValidationError(f"t_max must be > 0, got {self.t_max!r}")


def validate(params):
    """Re-run a record's invariant checks and return it.

    Reconstruction triggers ``__post_init__``, so a tampered or manually
    built instance fails here with the same typed errors as construction.
    """
    return dataclasses.replace(params)
