"""Closed-form emitter decay rates from a resonance expansion of the field.

Each lossy mode contributes a pole at ``omega - i kappa/2``.  Summing the
pole expansion of the field correlator gives, per mode,

    2 g^2 (omega_0/omega) [sin(2 phi)(omega - omega_0) + cos(2 phi) kappa/2]
    -----------------------------------------------------------------------
                   (omega - omega_0)^2 + kappa^2 / 4

which for a single mode factorizes into a Lorentzian envelope times the
affine phase factor.  The rate can be negative off resonance when phi != 0;
that is reported, never clamped, at this level.
"""

import dataclasses
import math

import numpy as np

from .core import QnmMode
from .errors import NonPositiveFrequency, PhaseSingular, ValidationError
from .spectral_density import phase_factor


@dataclasses.dataclass(frozen=True)
class QnmExpansion:
    """Ordered mode set; index 0 is the resonance the sweeps normalize to."""

    modes: tuple

    def __post_init__(self):
        modes = tuple(self.modes)
        if not modes:
            raise ValidationError("expansion needs at least one mode")
        for m in modes:
            if not isinstance(m, QnmMode):
                raise ValidationError(f"expected QnmMode, got {type(m).__name__}")
        object.__setattr__(self, "modes", modes)

    @classmethod
    def single(cls, mode: QnmMode) -> "QnmExpansion":
        return cls((mode,))

    @property
    def primary(self) -> QnmMode:
        return self.modes[0]


def _checked_omega0(omega_0):
    arr = np.asarray(omega_0, dtype=float)
    if not np.all(arr > 0.0):
        raise NonPositiveFrequency("emitter frequency must be > 0")
    return arr


def single_mode_rate(mode: QnmMode, omega_0):
    """Decay rate of an emitter at ``omega_0`` from one lossy mode.

    ``(4 g^2 / kappa) (omega_0/omega) * Lorentzian * phase_factor`` with the
    Lorentzian normalized to 1 on resonance.  Vectorized over ``omega_0``.
    """
    w0 = _checked_omega0(omega_0)
    half_k = 0.5 * mode.kappa
    lor = half_k**2 / (half_k**2 + (w0 - mode.omega) ** 2)
    chi = phase_factor(mode.phi, mode.q_factor, w0, mode.omega)
    out = (4.0 * mode.g**2 / mode.kappa) * (w0 / mode.omega) * lor * chi
    if np.ndim(omega_0) == 0:
        return float(out)
    return out


def multi_mode_rate(expansion: QnmExpansion, omega_0):
    """Decay rate summed over every mode of the expansion.

    Uses the pole-expansion form of each mode's contribution; algebraically
    identical to :func:`single_mode_rate` when the expansion has one mode.
    """
    w0 = _checked_omega0(omega_0)
    total = np.zeros_like(w0, dtype=float)
    for m in expansion.modes:
        det = m.omega - w0
        num = math.sin(2.0 * m.phi) * det + math.cos(2.0 * m.phi) * 0.5 * m.kappa
        total = total + 2.0 * m.g**2 * (w0 / m.omega) * num / (det**2 + 0.25 * m.kappa**2)
    if np.ndim(omega_0) == 0:
        return float(total)
    return total


def lorentzian_envelope(mode: QnmMode, omega_0):
    """Resonant rate times the mode Lorentzian; the phase-blind reference."""
    w0 = np.asarray(omega_0, dtype=float)
    half_k = 0.5 * mode.kappa
    gamma_res = single_mode_rate(mode, mode.omega)
    out = gamma_res * half_k**2 / (half_k**2 + (w0 - mode.omega) ** 2)
    if np.ndim(omega_0) == 0:
        return float(out)
    return out


def linearized_ratio(mode: QnmMode, omega_0):
    """First-order ratio of rate to envelope around resonance.

    ``1 + delta (1 - 2 Q tan(2 phi))`` with ``delta = omega_0/omega - 1``.
    The slope grows with Q; raises ``PhaseSingular`` within 1e-12 of the
    tan(2 phi) pole at phi = pi/4.
    """
    if abs(abs(mode.phi) - 0.25 * math.pi) < 1e-12:
        raise PhaseSingular(f"tan(2 phi) diverges at phi = {mode.phi!r}")
    delta = np.asarray(omega_0, dtype=float) / mode.omega - 1.0
    slope = 1.0 - 2.0 * mode.q_factor * math.tan(2.0 * mode.phi)
    out = 1.0 + slope * delta
    if np.ndim(omega_0) == 0:
        return float(out)
    return out


@dataclasses.dataclass(frozen=True)
class RateSweep:
    """Rate sweep over an emitter-frequency grid, normalized two ways."""

    omega_0: np.ndarray
    gamma: np.ndarray
    gamma_over_envelope: np.ndarray
    gamma_over_resonant: np.ndarray
    phase_factor: np.ndarray
    negative: np.ndarray
    slope_at_resonance: float


def rate_sweep(expansion: QnmExpansion, omega_0_grid) -> RateSweep:
    """Evaluate the multi-mode rate over a grid, with diagnostics.

    The envelope and phase factor refer to the primary mode.  The slope
    diagnostic is a central difference of gamma/envelope in the fractional
    detuning at resonance (step 1e-4 of the primary frequency).
    """
    w0 = _checked_omega0(omega_0_grid)
    primary = expansion.primary
    gamma = multi_mode_rate(expansion, w0)
    env = lorentzian_envelope(primary, w0)
    gamma_res = single_mode_rate(primary, primary.omega)
    chi = np.asarray(phase_factor(primary.phi, primary.q_factor, w0, primary.omega))

    h = 1e-4 * primary.omega
    pair = np.array([primary.omega - h, primary.omega + h])
    ratio_pair = multi_mode_rate(expansion, pair) / lorentzian_envelope(primary, pair)
    slope = float((ratio_pair[1] - ratio_pair[0]) / (2.0 * h / primary.omega))

    return RateSweep(
        omega_0=w0,
        gamma=gamma,
        gamma_over_envelope=gamma / env,
        gamma_over_resonant=gamma / gamma_res,
        phase_factor=chi,
        negative=gamma < 0.0,
        slope_at_resonance=slope,
    )
