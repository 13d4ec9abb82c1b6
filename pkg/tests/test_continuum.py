"""Closed-form decay rates: identities, limits, and the sweep diagnostics."""

import math

import numpy as np
import pytest

from qnmres.continuum import (
    QnmExpansion,
    linearized_ratio,
    lorentzian_envelope,
    multi_mode_rate,
    rate_sweep,
    single_mode_rate,
)
from qnmres.core import QnmMode
from qnmres.errors import NonPositiveFrequency, PhaseSingular, ValidationError


def test_resonant_rate_value():
    # At omega_0 = omega_c the rate is (4 g^2 / kappa) cos(2 phi).
    mode = QnmMode(omega=1.0, kappa=0.05, g=0.05)
    assert single_mode_rate(mode, 1.0) == pytest.approx(0.2, rel=1e-14)
    tilted = QnmMode(omega=1.0, kappa=0.05, g=0.05, phi=0.03)
    assert single_mode_rate(tilted, 1.0) == pytest.approx(0.2 * math.cos(0.06), rel=1e-14)


def test_half_linewidth_point():
    # One half-linewidth above resonance, real mode: Lorentzian = 1/2.
    mode = QnmMode(omega=1.0, kappa=0.05, g=0.05)
    expected = 0.2 * 1.025 * 0.5
    assert single_mode_rate(mode, 1.025) == pytest.approx(expected, rel=1e-14)


def test_pole_sum_matches_factorized_form():
    """The two algebraic forms of the single-mode rate are one function."""
    rng = np.random.default_rng(3)
    grid = np.linspace(0.5, 1.5, 400)
    for _ in range(10):
        q = float(np.exp(rng.uniform(math.log(5.0), math.log(300.0))))
        phi = float(rng.uniform(-0.3, 0.3))
        mode = QnmMode(omega=1.0, kappa=1.0 / q, g=0.02, phi=phi)
        a = single_mode_rate(mode, grid)
        b = multi_mode_rate(QnmExpansion.single(mode), grid)
        scale = abs(single_mode_rate(mode, 1.0))
        np.testing.assert_allclose(a, b, rtol=1e-12, atol=1e-14 * scale)


def test_rate_goes_negative_beyond_root():
    mode = QnmMode(omega=1.0, kappa=0.05, g=0.02, phi=0.03)
    root = 1.0 + math.cos(0.06) / (40.0 * math.sin(0.06))
    assert single_mode_rate(mode, root + 0.01) < 0.0
    assert single_mode_rate(mode, root - 0.01) > 0.0
    # A real mode never goes negative.
    real = QnmMode(omega=1.0, kappa=0.05, g=0.02)
    assert np.all(single_mode_rate(real, np.linspace(0.5, 1.5, 101)) > 0.0)


def test_multi_mode_is_additive():
    m1 = QnmMode(omega=1.0, kappa=0.05, g=0.02, phi=0.03)
    m2 = QnmMode(omega=1.3, kappa=0.2, g=0.05, phi=-0.1)
    grid = np.linspace(0.6, 1.6, 101)
    total = multi_mode_rate(QnmExpansion((m1, m2)), grid)
    parts = single_mode_rate(m1, grid) + single_mode_rate(m2, grid)
    np.testing.assert_allclose(total, parts, rtol=1e-12, atol=1e-16)


def test_envelope_half_width():
    mode = QnmMode(omega=1.0, kappa=0.05, g=0.05)
    peak = lorentzian_envelope(mode, 1.0)
    assert lorentzian_envelope(mode, 1.025) == pytest.approx(0.5 * peak, rel=1e-12)
    assert lorentzian_envelope(mode, 0.975) == pytest.approx(0.5 * peak, rel=1e-12)


def test_linearized_ratio_slope():
    mode = QnmMode(omega=1.0, kappa=0.05, g=0.02, phi=0.01)
    slope = 1.0 - 2.0 * 20.0 * math.tan(0.02)
    assert linearized_ratio(mode, 1.001) == pytest.approx(1.0 + slope * 1e-3, rel=1e-12)
    with pytest.raises(PhaseSingular):
        linearized_ratio(QnmMode(omega=1.0, kappa=0.05, g=0.02, phi=0.25 * math.pi), 1.0)


def test_expansion_validation():
    with pytest.raises(ValidationError):
        QnmExpansion(())
    with pytest.raises(ValidationError):
        QnmExpansion((1.0,))


def test_rate_sweep_consistency():
    mode = QnmMode(omega=1.0, kappa=0.05, g=0.02, phi=0.02)
    grid = np.linspace(0.5, 1.5, 501)
    sweep = rate_sweep(QnmExpansion.single(mode), grid)
    np.testing.assert_allclose(
        sweep.gamma_over_envelope * lorentzian_envelope(mode, grid),
        sweep.gamma, rtol=1e-12,
    )
    np.testing.assert_allclose(
        sweep.gamma_over_resonant * single_mode_rate(mode, 1.0),
        sweep.gamma, rtol=1e-12,
    )
    assert np.array_equal(sweep.negative, sweep.gamma < 0.0)
    # gamma/envelope is quadratic in the detuning, so the central difference
    # reproduces the linearized slope to rounding.
    expected = 1.0 - 2.0 * mode.q_factor * math.tan(2.0 * mode.phi)
    assert sweep.slope_at_resonance == pytest.approx(expected, abs=1e-8)


def test_rejects_bad_frequencies():
    mode = QnmMode(omega=1.0, kappa=0.05, g=0.02)
    with pytest.raises(NonPositiveFrequency):
        single_mode_rate(mode, -1.0)
    with pytest.raises(NonPositiveFrequency):
        multi_mode_rate(QnmExpansion.single(mode), np.array([0.5, 0.0]))
