"""Emitter-cavity ladder: product-basis operators and dressed states.

The Hilbert space is (cavity Fock up to ``fock_cutoff``) x (two-level
emitter), ordered photon-major: index ``2n`` is |n, g> and ``2n + 1`` is
|n, e>.  In the frame rotating at the cavity frequency the Hamiltonian

    H = delta sp sm + g (a sp + a^dag sm)

conserves total excitation number, so it is diagonalized block by block;
manifold ``n >= 1`` couples |n, g> with |n-1, e>.
"""

import dataclasses
import math

import numpy as np

from .core import Gauge
from .errors import DegenerateManifold, ValidationError


def annihilation_operator(fock_cutoff: int) -> np.ndarray:
    """Cavity lowering operator on the product basis (real matrix)."""
    dim = 2 * (fock_cutoff + 1)
    a = np.zeros((dim, dim))
    for n in range(1, fock_cutoff + 1):
        for s in (0, 1):
            a[2 * (n - 1) + s, 2 * n + s] = math.sqrt(n)
    return a


def tls_lowering(fock_cutoff: int) -> np.ndarray:
    """Emitter lowering operator |g><e| on the product basis."""
    dim = 2 * (fock_cutoff + 1)
    sm = np.zeros((dim, dim))
    for n in range(fock_cutoff + 1):
        sm[2 * n, 2 * n + 1] = 1.0
    return sm


def excitation_numbers(fock_cutoff: int) -> np.ndarray:
    """Total excitation number n + s per product-basis index."""
    dim = 2 * (fock_cutoff + 1)
    idx = np.arange(dim)
    return idx // 2 + idx % 2


@dataclasses.dataclass(frozen=True)
class JcSystem:
    """Resonant emitter-cavity block in the rotating frame.

    ``g_gauge`` is the coupling after gauge resolution; use
    :meth:`from_dipole` to build it from the dipole-gauge magnitude.
    """

    delta: float
    g_gauge: float
    gauge: Gauge = Gauge.DIPOLE
    fock_cutoff: int = 1

    def __post_init__(self):
        if not math.isfinite(self.delta):
            raise ValidationError(f"detuning must be finite, got {self.delta!r}")
        if not self.g_gauge >= 0.0:
            raise ValidationError(f"coupling must be >= 0, got {self.g_gauge!r}")
        if int(self.fock_cutoff) != self.fock_cutoff or self.fock_cutoff < 1:
            raise ValidationError(
                f"fock_cutoff must be an integer >= 1, got {self.fock_cutoff!r}"
            )
        object.__setattr__(self, "fock_cutoff", int(self.fock_cutoff))

    @classmethod
    def from_dipole(cls, g_d: float, gauge: Gauge, omega_0: float, omega_c: float = 1.0,
                    fock_cutoff: int = 1) -> "JcSystem":
        return cls(
            delta=omega_0 - omega_c,
            g_gauge=gauge.coupling(g_d, omega_0, omega_c),
            gauge=gauge,
            fock_cutoff=fock_cutoff,
        )

    @property
    def dim(self) -> int:
        return 2 * (self.fock_cutoff + 1)

    def hamiltonian(self) -> np.ndarray:
        sm = tls_lowering(self.fock_cutoff)
        a = annihilation_operator(self.fock_cutoff)
        sp = sm.T
        return self.delta * (sp @ sm) + self.g_gauge * (a @ sp + a.T @ sm)


@dataclasses.dataclass(frozen=True)
class SingleExcitation:
    """Closed-form one-excitation dressed pair."""

    eta: float
    omega_plus: float
    omega_minus: float
    c_plus: float
    c_minus: float


def analytic_single_excitation(delta: float, g: float,
                               tolerance: float = 1e-12) -> SingleExcitation:
    """Dressed energies and ground-state overlaps for one excitation.

    ``eta = sqrt(delta^2 + 4 g^2)``, energies ``delta/2 +- eta/2``, and
    ``c_alpha = sqrt((1 - alpha delta/eta)/2)`` is |<G| a |alpha>| for
    alpha = +-1.  Raises ``DegenerateManifold`` when eta <= tolerance.
    """
    eta = math.hypot(delta, 2.0 * g)
    if eta <= tolerance:
        raise DegenerateManifold(f"splitting {eta!r} below tolerance {tolerance!r}")
    c_plus = math.sqrt(max(0.5 * (1.0 - delta / eta), 0.0))
    c_minus = math.sqrt(max(0.5 * (1.0 + delta / eta), 0.0))
    result = SingleExcitation(
        eta=eta,
        omega_plus=0.5 * delta + 0.5 * eta,
        omega_minus=0.5 * delta - 0.5 * eta,
        c_plus=c_plus,
        c_minus=c_minus,
    )
    # |alpha> = c_alpha |1,g> + alpha c_{-alpha} |0,e> must reproduce the
    # overlaps: <G|a|alpha> = c_alpha.
    for sign, c_a, c_b, w in (
        (1.0, c_plus, c_minus, result.omega_plus),
        (-1.0, c_minus, c_plus, result.omega_minus),
    ):
        h_v = np.array([g * sign * c_b, delta * sign * c_b + g * c_a])
        if not np.allclose(h_v, w * np.array([c_a, sign * c_b]), atol=1e-12 * max(eta, 1.0)):
            raise AssertionError("closed-form dressed pair failed self-check")
    return result


@dataclasses.dataclass(frozen=True)
class DressedBasis:
    """Eigendecomposition of the ladder, energies ascending.

    ``states[:, k]`` is the k-th dressed state in the product basis;
    ``lowering`` holds <j| a |k> and is nonzero only between adjacent
    manifolds.  Eigenvector signs follow the convention that the
    largest-magnitude component is positive, which can differ from the
    closed-form states by an overall sign (observables never see it).
    """

    energies: np.ndarray
    states: np.ndarray
    lowering: np.ndarray
    manifold: np.ndarray
    fock_cutoff: int

    @property
    def dim(self) -> int:
        return self.energies.size

    @property
    def ground_index(self) -> int:
        return int(np.flatnonzero(self.manifold == 0)[0])


def _fix_signs(vectors: np.ndarray) -> np.ndarray:
    for k in range(vectors.shape[1]):
        lead = np.argmax(np.abs(vectors[:, k]))
        if vectors[lead, k] < 0.0:
            vectors[:, k] = -vectors[:, k]
    return vectors


def diagonalize(system: JcSystem) -> DressedBasis:
    """Dressed basis of the ladder, solved per excitation manifold.

    Blockwise diagonalization keeps degenerate states (e.g. at delta = 0)
    from mixing across manifolds, so excitation labels stay exact.
    """
    cutoff = system.fock_cutoff
    dim = system.dim
    energies = np.empty(dim)
    manifold = np.empty(dim, dtype=int)
    states = np.zeros((dim, dim))

    col = 0
    energies[col] = 0.0
    manifold[col] = 0
    states[0, col] = 1.0
    col += 1
    for n in range(1, cutoff + 1):
        idx = [2 * n, 2 * n - 1]  # |n, g>, |n-1, e>
        block = np.array([
            [0.0, system.g_gauge * math.sqrt(n)],
            [system.g_gauge * math.sqrt(n), system.delta],
        ])
        vals, vecs = np.linalg.eigh(block)
        for k in range(2):
            energies[col] = vals[k]
            manifold[col] = n
            states[idx, col] = vecs[:, k]
            col += 1
    energies[col] = system.delta  # top manifold holds bare |cutoff, e> only
    manifold[col] = cutoff + 1
    states[2 * cutoff + 1, col] = 1.0

    order = np.argsort(energies, kind="stable")
    energies = energies[order]
    manifold = manifold[order]
    states = _fix_signs(states[:, order])

    a = annihilation_operator(cutoff)
    lowering = states.T @ a @ states
    return DressedBasis(
        energies=energies,
        states=states,
        lowering=lowering,
        manifold=manifold,
        fock_cutoff=cutoff,
    )
