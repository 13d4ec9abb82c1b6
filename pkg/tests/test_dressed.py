"""Ladder operators and blockwise dressed-state diagonalization."""

import math

import numpy as np
import pytest

from qnmres.core import Gauge
from qnmres.dressed import (
    JcSystem,
    analytic_single_excitation,
    annihilation_operator,
    diagonalize,
    excitation_numbers,
    tls_lowering,
)
from qnmres.errors import DegenerateManifold, ValidationError


def test_ladder_operators():
    a = annihilation_operator(3)
    number = a.T @ a
    # n per product index, photon-major ordering.
    np.testing.assert_allclose(np.diag(number), [0, 0, 1, 1, 2, 2, 3, 3])
    sm = tls_lowering(3)
    assert np.all(sm @ sm == 0.0)
    np.testing.assert_allclose(np.diag(sm.T @ sm), [0, 1] * 4)
    # Bare matrix elements are sqrt(n).
    assert a[0, 2] == 1.0 and a[2, 4] == pytest.approx(math.sqrt(2))


def test_excitation_numbers():
    np.testing.assert_array_equal(excitation_numbers(2), [0, 1, 1, 2, 2, 3])


def test_system_validation():
    with pytest.raises(ValidationError):
        JcSystem(delta=0.0, g_gauge=-0.1)
    with pytest.raises(ValidationError):
        JcSystem(delta=math.inf, g_gauge=0.1)
    with pytest.raises(ValidationError):
        JcSystem(delta=0.0, g_gauge=0.1, fock_cutoff=0)


def test_from_dipole_gauges():
    dip = JcSystem.from_dipole(0.05, Gauge.DIPOLE, 1.2, 1.0)
    cou = JcSystem.from_dipole(0.05, Gauge.COULOMB, 1.2, 1.0)
    assert dip.delta == cou.delta == pytest.approx(0.2)
    assert dip.g_gauge == 0.05
    assert cou.g_gauge == pytest.approx(0.06)


def test_analytic_pair_oracle():
    # delta = 3 g: eta = sqrt(13) g.
    pair = analytic_single_excitation(0.15, 0.05)
    assert pair.eta == pytest.approx(0.05 * math.sqrt(13.0), rel=1e-14)
    assert pair.omega_plus == pytest.approx(0.16513878188659972, abs=1e-15)
    assert pair.omega_minus == pytest.approx(-0.015138781886599728, abs=1e-15)
    assert pair.c_plus**2 + pair.c_minus**2 == pytest.approx(1.0, rel=1e-14)
    # Resonant: equal sharing and a +-g splitting.
    res = analytic_single_excitation(0.0, 0.05)
    assert res.omega_plus == pytest.approx(0.05) and res.omega_minus == pytest.approx(-0.05)
    assert res.c_plus == pytest.approx(1 / math.sqrt(2), rel=1e-14)
    with pytest.raises(DegenerateManifold):
        analytic_single_excitation(0.0, 0.0)


def test_diagonalize_matches_hamiltonian():
    for delta, g in ((0.0, 0.05), (0.12, 0.03), (-0.07, 0.02)):
        system = JcSystem(delta=delta, g_gauge=g, fock_cutoff=4)
        basis = diagonalize(system)
        h = system.hamiltonian()
        # Eigen-relation on the full matrix, energies ascending.
        residual = h @ basis.states - basis.states * basis.energies
        assert np.max(np.abs(residual)) < 1e-12
        assert np.all(np.diff(basis.energies) > -1e-15)
        np.testing.assert_allclose(
            basis.states.T @ basis.states, np.eye(basis.dim), atol=1e-13
        )


def test_manifold_labels_are_exact():
    system = JcSystem(delta=0.0, g_gauge=0.05, fock_cutoff=3)
    basis = diagonalize(system)
    n_exc = excitation_numbers(3)
    for k in range(basis.dim):
        support = np.flatnonzero(np.abs(basis.states[:, k]) > 1e-14)
        assert np.all(n_exc[support] == basis.manifold[k])
    assert basis.manifold[basis.ground_index] == 0
    assert basis.energies[basis.ground_index] == 0.0


def test_lowering_connects_adjacent_manifolds():
    system = JcSystem(delta=0.08, g_gauge=0.04, fock_cutoff=3)
    basis = diagonalize(system)
    for j in range(basis.dim):
        for k in range(basis.dim):
            if abs(basis.lowering[j, k]) > 1e-14:
                assert basis.manifold[k] == basis.manifold[j] + 1


def test_single_excitation_overlaps():
    """|<G| a |alpha>| equals the closed-form coefficient, any sign convention."""
    rng = np.random.default_rng(5)
    for _ in range(20):
        delta = rng.uniform(-0.2, 0.2)
        g = rng.uniform(1e-3, 0.1)
        pair = analytic_single_excitation(delta, g)
        basis = diagonalize(JcSystem(delta=delta, g_gauge=g, fock_cutoff=1))
        one = np.flatnonzero(basis.manifold == 1)
        energies = basis.energies[one]
        overlaps = np.abs(basis.lowering[basis.ground_index, one])
        i_plus = int(np.argmax(energies))
        i_minus = 1 - i_plus
        assert energies[i_plus] == pytest.approx(pair.omega_plus, abs=1e-13)
        assert energies[i_minus] == pytest.approx(pair.omega_minus, abs=1e-13)
        assert overlaps[i_plus] == pytest.approx(pair.c_plus, abs=1e-13)
        assert overlaps[i_minus] == pytest.approx(pair.c_minus, abs=1e-13)


def test_uncoupled_limit_keeps_bare_elements():
    # g = 0: dressed lowering is the bare one up to state ordering.
    basis = diagonalize(JcSystem(delta=0.07, g_gauge=0.0, fock_cutoff=3))
    bare = np.sort(np.abs(annihilation_operator(3)[np.abs(annihilation_operator(3)) > 0]))
    dressed = np.sort(np.abs(basis.lowering[np.abs(basis.lowering) > 1e-14]))
    np.testing.assert_allclose(dressed, bare, atol=1e-14)
