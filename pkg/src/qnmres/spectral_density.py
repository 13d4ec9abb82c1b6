"""System-bath coupling amplitudes and spectral densities for a lossy mode.

A single lossy cavity resonance seen from the emitter is equivalent to a
continuum of bath oscillators with coupling amplitude ``Lambda(omega)``.  Near
resonance every admissible amplitude reduces to a power law

    Lambda(omega) = sqrt(kappa_c / 2 pi) * (omega / omega_c) ** n,

normalized so the spectral density ``J(omega) = 2 pi Lambda(omega)**2``
equals ``kappa_c`` exactly at ``omega = omega_c``.  A complex-valued mode
profile (phase ``phi0`` at the emitter) multiplies ``J`` by the affine factor
returned by :func:`phase_factor`, which changes the local slope of the
continuum and can turn negative away from resonance.
"""

import dataclasses
import enum
import logging
import math

import numpy as np

from .core import reduce_phase
from .errors import (
    NegativeSpectralDensity,
    NonPositiveFrequency,
    NonPositiveLinewidth,
    ValidationError,
)

log = logging.getLogger(__name__)


def phase_factor(phi0, q_factor, omega, omega_c=1.0):
    """Frequency-linear correction from a complex mode profile.

    Returns ``cos(2 phi0) - 2 q sin(2 phi0) (omega/omega_c - 1)``.  Affine in
    omega, equal to cos(2 phi0) on resonance and to 1 for a real mode, and
    negative beyond the root when ``phi0 != 0``.  Scalar in, scalar out.
    """
    phi0 = float(phi0)
    delta = np.asarray(omega) / omega_c - 1.0
    out = math.cos(2.0 * phi0) - 2.0 * q_factor * math.sin(2.0 * phi0) * delta
    if np.ndim(omega) == 0:
        return float(out)
    return out


class NegativeChiPolicy(enum.Enum):
    """What to do where the phase factor drives ``J`` negative."""

    CLAMP = "clamp"
    ERROR = "error"


@dataclasses.dataclass(frozen=True)
class PhaseCorrection:
    """Phase and quality factor entering :func:`phase_factor`."""

    phi0: float
    q_factor: float

    def __post_init__(self):
        if not self.q_factor > 0.0:
            raise ValidationError(f"q_factor must be > 0, got {self.q_factor!r}")
        object.__setattr__(self, "phi0", reduce_phase(self.phi0))


@dataclasses.dataclass(frozen=True)
class SystemBathCoupling:
    """Bath coupling for one lossy mode of linewidth ``kappa_c``.

    Parameters
    ----------
    kappa_c : float
        Mode linewidth, > 0.
    omega_c : float
        Mode frequency, > 0.
    exponent : float
        Power-law exponent ``n``.  ``+1/2`` pairs with the dipole gauge,
        ``-1/2`` with the Coulomb gauge, ``0`` is a flat bath.
    phase_correction : PhaseCorrection or None
        When set, multiplies the spectral density by the phase factor.
    negative_chi : NegativeChiPolicy
        CLAMP zeroes the coupling where the phase factor is negative (with a
        logged warning); ERROR raises ``NegativeSpectralDensity`` instead.
    """

    kappa_c: float
    omega_c: float = 1.0
    exponent: float = -0.5
    phase_correction: PhaseCorrection | None = None
    negative_chi: NegativeChiPolicy = NegativeChiPolicy.CLAMP

    def __post_init__(self):
        if not self.kappa_c > 0.0:
            raise NonPositiveLinewidth(f"kappa_c must be > 0, got {self.kappa_c!r}")
        if not self.omega_c > 0.0:
            raise NonPositiveFrequency(f"omega_c must be > 0, got {self.omega_c!r}")
        if not math.isfinite(self.exponent):
            raise ValidationError(f"exponent must be finite, got {self.exponent!r}")

    def _checked_ratio(self, omega):
        arr = np.asarray(omega, dtype=float)
        if not np.all(arr > 0.0):
            raise NonPositiveFrequency("bath frequencies must be > 0")
        return arr / self.omega_c

    def _chi(self, omega):
        pc = self.phase_correction
        chi = np.asarray(phase_factor(pc.phi0, pc.q_factor, omega, self.omega_c))
        neg = chi < 0.0
        if np.any(neg):
            if self.negative_chi is NegativeChiPolicy.ERROR:
                raise NegativeSpectralDensity(
                    "phase factor negative at "
                    f"{int(np.count_nonzero(neg))} of {neg.size} frequencies"
                )
            log.warning(
                "coupling clamped to zero at %d of %d frequencies "
                "(negative phase factor)",
                int(np.count_nonzero(neg)),
                neg.size,
            )
            chi = np.where(neg, 0.0, chi)
        return chi

    def spectral_density(self, omega):
        """``J(omega) = kappa_c (omega/omega_c)**(2n)``, times the phase factor if set.

        Computed directly from the exponent ``2n`` so that ``J(omega_c)``
        equals ``kappa_c`` exactly for every power-law variant.
        """
        ratio = self._checked_ratio(omega)
        j = self.kappa_c * ratio ** (2.0 * self.exponent)
        if self.phase_correction is not None:
            j = j * self._chi(omega)
        if np.ndim(omega) == 0:
            return float(j)
        return j

    def amplitude(self, omega):
        """Coupling amplitude ``Lambda(omega) = sqrt(J(omega) / 2 pi)`` >= 0."""
        j = self.spectral_density(omega)
        return np.sqrt(j / (2.0 * math.pi))


def spectral_density_table(phi0_values, omegas, kappa_c, omega_c=1.0, exponent=-0.5,
                           negative_chi=NegativeChiPolicy.CLAMP):
    """Normalized spectral-density curves ``J(omega)/kappa_c``, one per phase.

    Parameters
    ----------
    phi0_values : sequence of float
        Mode phases; each yields one column.
    omegas : array
        Frequencies, all > 0.
    kappa_c, omega_c, exponent :
        Base power-law parameters; the quality factor of the phase factor is
        ``omega_c / kappa_c``.

    Returns
    -------
    ndarray of shape (len(omegas), len(phi0_values))
    """
    omegas = np.asarray(omegas, dtype=float)
    q = omega_c / kappa_c
    cols = []
    for phi0 in phi0_values:
        coupling = SystemBathCoupling(
            kappa_c=kappa_c,
            omega_c=omega_c,
            exponent=exponent,
            phase_correction=PhaseCorrection(phi0=phi0, q_factor=q),
            negative_chi=negative_chi,
        )
        cols.append(coupling.spectral_density(omegas) / kappa_c)
    return np.column_stack(cols)
