"""Non-secular Born-Markov generator for an emitter in a lossy cavity.

The cavity line is eliminated in favor of a structured bath; second order in
the system-bath coupling then gives, without a secular approximation,

    drho/dt = -i [H, rho]
              + sum_(j,k) pi a_jk Lambda^2(w_c + e_k - e_j)
                ([ |j><k| rho, a^dag ] + [ a, rho |k><j| ])

where the sum runs over dressed-state pairs one excitation apart,
``a_jk = <j| a |k>`` is real, and the bath is sampled at the absolute (lab
frame) transition frequency.  The two commutators are Hermitian conjugates
on Hermitian rho, so the generator preserves trace and Hermiticity exactly
by construction; positivity is *not* structural, which is the point.

Everything here works on dense matrices with column-stacked vectorization:
``vec(A rho B) = kron(B.T, A) vec(rho)``.  Dimensions stay tiny (a few tens
of levels), so clarity wins over sparsity.
"""

import dataclasses
import logging
import math

import numpy as np
import scipy.integrate
import scipy.linalg

from .core import Gauge
from .dressed import (
    DressedBasis,
    JcSystem,
    annihilation_operator,
    diagonalize,
    excitation_numbers,
    tls_lowering,
)
from .errors import (
    DegenerateSteadyState,
    EigenvalueAmbiguous,
    NegativeBathFrequency,
    StepSizeUnderflow,
    ToleranceNotMet,
    ValidationError,
)
from .spectral_density import SystemBathCoupling

log = logging.getLogger(__name__)


def vec(m: np.ndarray) -> np.ndarray:
    """Column-stack a matrix."""
    return np.asarray(m).reshape(-1, order="F")


def unvec(v: np.ndarray, dim: int) -> np.ndarray:
    return np.asarray(v).reshape((dim, dim), order="F")


def spre(a: np.ndarray) -> np.ndarray:
    return np.kron(np.eye(a.shape[0]), a)


def spost(b: np.ndarray) -> np.ndarray:
    return np.kron(b.T, np.eye(b.shape[0]))


def dissipator(a: np.ndarray) -> np.ndarray:
    """Lindblad dissipator D[a] as a superoperator matrix."""
    ada = a.conj().T @ a
    return (
        np.kron(a.conj(), a)
        - 0.5 * np.kron(np.eye(a.shape[0]), ada)
        - 0.5 * np.kron(ada.T, np.eye(a.shape[0]))
    )


@dataclasses.dataclass(frozen=True)
class Liouvillian:
    """Dense generator plus the ingredients it was built from."""

    generator: np.ndarray
    system: JcSystem
    coupling: SystemBathCoupling | None
    pump_rate: float
    secular: bool
    basis: DressedBasis

    @property
    def dim(self) -> int:
        return self.system.dim


def _transition_pairs(basis: DressedBasis):
    """Dressed pairs (j, k) one excitation apart with a nonzero matrix element."""
    for j in range(basis.dim):
        for k in range(basis.dim):
            if basis.manifold[k] != basis.manifold[j] + 1:
                continue
            a_jk = basis.lowering[j, k]
            if a_jk == 0.0:
                continue
            yield j, k, a_jk


def build_generator(system: JcSystem, coupling: SystemBathCoupling | None,
                    pump_rate: float = 0.0, *, secular: bool = False) -> Liouvillian:
    """Assemble the master-equation generator on the product basis.

    Parameters
    ----------
    system : JcSystem
        Coherent emitter-cavity block.
    coupling : SystemBathCoupling or None
        Bath seen by the cavity quadrature; ``None`` builds the closed
        (purely coherent) generator.
    pump_rate : float
        Incoherent emitter repump rate; adds ``pump_rate * D[sp]``.
    secular : bool
        When True, replace the paired-commutator form by one Lindblad
        dissipator per dressed transition at the same sampled frequencies.
        Deliberately *wrong* off resonance; kept for comparison.

    Raises
    ------
    NegativeBathFrequency
        If any contributing transition falls at an absolute frequency <= 0.
    """
    if not pump_rate >= 0.0:
        raise ValidationError(f"pump_rate must be >= 0, got {pump_rate!r}")
    basis = diagonalize(system)
    dim = system.dim
    ident = np.eye(dim)

    h = system.hamiltonian()
    gen = (-1j * (spre(h) - spost(h))).astype(complex)

    if coupling is not None:
        a = annihilation_operator(system.fock_cutoff)
        if secular:
            for j, k, a_jk in _transition_pairs(basis):
                lab = coupling.omega_c + basis.energies[k] - basis.energies[j]
                if not lab > 0.0:
                    raise NegativeBathFrequency(
                        f"transition sampled at {lab!r} <= 0"
                    )
                rate = coupling.spectral_density(lab) * a_jk**2
                jump = np.outer(basis.states[:, j], basis.states[:, k])
                gen += rate * dissipator(jump)
        else:
            # Rate-weighted lowering operator: the paired commutators are
            # linear in |j><k|, so the pair sum collapses onto one matrix.
            s_dressed = np.zeros((dim, dim))
            for j, k, a_jk in _transition_pairs(basis):
                lab = coupling.omega_c + basis.energies[k] - basis.energies[j]
                if not lab > 0.0:
                    raise NegativeBathFrequency(
                        f"transition sampled at {lab!r} <= 0"
                    )
                s_dressed[j, k] = 0.5 * coupling.spectral_density(lab) * a_jk
            s = basis.states @ s_dressed @ basis.states.T
            gen += (
                np.kron(a, s)            # S rho a^dag
                - np.kron(ident, a.T @ s)  # -a^dag S rho
                + np.kron(s, a)          # a rho S^dag
                - np.kron(a.T @ s, ident)  # -rho S^dag a
            )

    if pump_rate > 0.0:
        gen += pump_rate * dissipator(tls_lowering(system.fock_cutoff).T)

    return Liouvillian(
        generator=gen,
        system=system,
        coupling=coupling,
        pump_rate=float(pump_rate),
        secular=bool(secular),
        basis=basis,
    )


def _group_steps(dts: np.ndarray):
    """Cluster step sizes that agree to 1 part in 1e9 of the largest."""
    scale = dts.max()
    keys = np.round(dts / (1e-9 * scale)).astype(np.int64)
    groups = {}
    for i, key in enumerate(keys):
        groups.setdefault(key, []).append(i)
    return [(dts[idx[0]], idx) for idx in groups.values()]


def propagate(liou: Liouvillian, m0: np.ndarray, times, tolerance: float = 1e-10,
              method: str = "auto") -> np.ndarray:
    """March any operator through exp(L t) on a grid of times.

    ``auto`` exponentiates the (constant) generator once per distinct step
    size and verifies the largest exponential against its step-doubled
    square; adaptive Runge-Kutta (``dop853``/``rk45``) is kept as an
    independent cross-check for tests and callers that want one.
    """
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or times.size < 1:
        raise ValidationError("times must be a non-empty 1-d array")
    dts = np.diff(times)
    if np.any(dts <= 0.0):
        raise ValidationError("times must be strictly increasing")
    gen = liou.generator
    dim = liou.dim
    y = vec(np.asarray(m0, dtype=complex))
    out = np.empty((times.size, dim, dim), dtype=complex)
    out[0] = m0

    if method in ("auto", "expm"):
        if times.size == 1:
            return out
        groups = _group_steps(dts)
        if len(groups) > 32:
            raise ValidationError(
                f"{len(groups)} distinct step sizes; use a uniform grid or an "
                "adaptive method"
            )
        step_prop = {}
        dt_big = max(dt for dt, _ in groups)
        for dt, idx in groups:
            p = scipy.linalg.expm(gen * dt)
            if dt == dt_big:
                half = scipy.linalg.expm(gen * (0.5 * dt))
                resid = np.max(np.abs(half @ half - p)) / max(np.max(np.abs(p)), 1e-300)
                if resid > max(tolerance, 1e-12):
                    raise ToleranceNotMet(
                        f"step-doubling residual {resid:.3e} exceeds {tolerance:.3e}"
                    )
            for i in idx:
                step_prop[i] = p
        for i in range(dts.size):
            y = step_prop[i] @ y
            out[i + 1] = unvec(y, dim)
        return out

    if method in ("dop853", "rk45"):
        rtol = max(tolerance, 1e-12)
        atol = rtol * max(np.max(np.abs(y)), 1.0) * 1e-3
        sol = scipy.integrate.solve_ivp(
            lambda _t, v: gen @ v,
            (times[0], times[-1]),
            y,
            method="DOP853" if method == "dop853" else "RK45",
            t_eval=times,
            rtol=rtol,
            atol=atol,
        )
        if not sol.success:
            raise StepSizeUnderflow(sol.message)
        for i in range(times.size):
            out[i] = unvec(sol.y[:, i], dim)
        return out

    raise ValidationError(f"unknown method {method!r}")


@dataclasses.dataclass(frozen=True)
class Trajectory:
    """Density-matrix trajectory with bookkeeping diagnostics."""

    times: np.ndarray
    states: np.ndarray
    trace_drift: float
    min_eigenvalue: float
    method: str


def evolve(liou: Liouvillian, rho0: np.ndarray, t_max: float, *,
           n_points: int = 201, tolerance: float = 1e-10,
           method: str = "auto") -> Trajectory:
    """Propagate a density matrix from t = 0 to ``t_max``.

    The state is validated going in (Hermitian to 1e-12, unit trace to
    1e-10).  Trace drift beyond 1e-9 raises ``ToleranceNotMet``; the
    smallest eigenvalue along the trajectory is recorded and logged when it
    dips below -1e-8, since the non-secular generator is free to do that.
    """
    rho0 = np.asarray(rho0, dtype=complex)
    dim = liou.dim
    if rho0.shape != (dim, dim):
        raise ValidationError(f"rho0 must be {dim} x {dim}, got {rho0.shape}")
    if np.max(np.abs(rho0 - rho0.conj().T)) > 1e-12:
        raise ValidationError("rho0 is not Hermitian")
    if abs(np.trace(rho0).real - 1.0) > 1e-10 or abs(np.trace(rho0).imag) > 1e-10:
        raise ValidationError("rho0 trace must be 1")
    if not t_max > 0.0:
        raise ValidationError(f"t_max must be > 0, got {t_max!r}")

    times = np.linspace(0.0, t_max, n_points)
    states = propagate(liou, rho0, times, tolerance=tolerance, method=method)

    traces = np.einsum("tii->t", states)
    drift = float(np.max(np.abs(traces - 1.0)))
    if drift > 1e-9:
        raise ToleranceNotMet(f"trace drift {drift:.3e} exceeds 1e-9")
    herm = 0.5 * (states + np.conj(np.transpose(states, (0, 2, 1))))
    min_eig = float(np.min(np.linalg.eigvalsh(herm)))
    if min_eig < -1e-8:
        log.warning("density matrix went negative: min eigenvalue %.3e", min_eig)

    return Trajectory(
        times=times,
        states=states,
        trace_drift=drift,
        min_eigenvalue=min_eig,
        method=method,
    )


def steady_state(liou: Liouvillian) -> np.ndarray:
    """Stationary density matrix from the generator's null space.

    SVD-based; raises ``DegenerateSteadyState`` unless the kernel is
    one-dimensional at a rank tolerance of 1e-10 relative to the largest
    singular value.
    """
    gen = liou.generator
    _u, sing, vh = np.linalg.svd(gen)
    null_mask = sing < 1e-10 * sing[0]
    n_null = int(np.count_nonzero(null_mask))
    if n_null != 1:
        raise DegenerateSteadyState(
            f"generator kernel is {n_null}-dimensional, expected 1"
        )
    rho = unvec(vh[-1].conj(), liou.dim)
    rho = 0.5 * (rho + rho.conj().T)
    tr = np.trace(rho).real
    if abs(tr) < 1e-12:
        raise DegenerateSteadyState("kernel vector is traceless")
    return rho / tr


def _population_vec_indices(fock_cutoff: int) -> np.ndarray:
    """Vectorized indices of the excitation-conserving (population) sector."""
    n_exc = excitation_numbers(fock_cutoff)
    mask = n_exc[:, None] == n_exc[None, :]
    return np.flatnonzero(mask.reshape(-1, order="F"))


def decay_eigenvalue(liou: Liouvillian, g_d: float, *,
                     rel_tol: float = 0.01) -> complex:
    """Slow population-sector eigenvalue governing emitter decay.

    Two independent routes must agree to ``rel_tol``: the slowest weighted
    eigenvalue of the excitation-conserving block reached from |0, e>, and
    an exponential fit to the propagated excited-state population after the
    fast transient has died.  Disagreement raises ``EigenvalueAmbiguous``
    rather than silently trusting either number.  Weak coupling is assumed;
    an underdamped (oscillating) population also trips the fit gate.
    """
    if liou.coupling is None:
        raise ValidationError("closed system has no decay eigenvalue")
    kappa = liou.coupling.kappa_c
    dim = liou.dim
    gen = liou.generator
    sel = _population_vec_indices(liou.system.fock_cutoff)
    other = np.setdiff1d(np.arange(dim * dim), sel)
    leak = np.max(np.abs(gen[np.ix_(other, sel)])) if other.size else 0.0
    if leak > 1e-12 * max(np.max(np.abs(gen)), 1e-300):
        raise EigenvalueAmbiguous(
            f"generator couples the population sector outward (leak {leak:.3e})"
        )

    block = gen[np.ix_(sel, sel)]
    vals, vecs = scipy.linalg.eig(block)

    sp = tls_lowering(liou.system.fock_cutoff).T
    p_e = (sp @ sp.T).real  # |e><e| projector, diagonal
    rho0 = np.zeros((dim, dim))
    rho0[1, 1] = 1.0  # |0, e>

    init = vec(rho0)[sel].astype(complex)
    coeff = np.linalg.solve(vecs, init)
    overlap = vec(p_e.T)[sel] @ vecs
    weights = overlap * coeff

    scale = np.max(np.abs(vals))
    floor = 1e-9 * max(1.0, float(np.max(np.abs(weights))))
    live = (vals.real < -1e-12 * scale) & (np.abs(weights) > floor)
    if np.any(live):
        cand = np.flatnonzero(live)
        lam = complex(vals[cand[np.argmin(np.abs(vals.real[cand]))]])
    else:
        lam = 0.0 + 0.0j

    # Independent check: log-linear fit of P_e(t) past the transient.
    if lam == 0.0:
        times = np.linspace(0.0, 50.0 / kappa, 101)
    else:
        gamma_est = abs(lam.real)
        t_burn = 40.0 / kappa
        window = 0.3 / gamma_est
        times = np.concatenate(([0.0], t_burn + np.linspace(0.0, window, 201)))
    states = propagate(liou, rho0, times)
    pe = np.einsum("ij,tji->t", p_e, states).real[1:]
    t_fit = times[1:]
    if np.any(pe <= 0.0):
        raise EigenvalueAmbiguous("excited population not positive in fit window")
    slope = np.polyfit(t_fit, np.log(pe), 1)[0]
    gamma_fit = -float(slope)

    target = -lam.real
    if abs(gamma_fit - target) > rel_tol * abs(target) + 1e-12 * kappa:
        raise EigenvalueAmbiguous(
            f"spectral rate {target:.6e} vs fitted {gamma_fit:.6e} "
            f"disagree beyond {rel_tol:.1%}"
        )
    if g_d == 0.0 and lam != 0.0:
        raise EigenvalueAmbiguous("nonzero decay found for an uncoupled emitter")
    return lam


def perturbative_rate(delta: float, g_d: float, gauge: Gauge,
                      coupling: SystemBathCoupling, *,
                      omega_0: float | None = None) -> float:
    """Second-order decay rate ``g^2 J(omega_0) / (kappa^2/4 + delta^2)``.

    ``omega_0`` defaults to ``coupling.omega_c + delta`` and, when passed
    explicitly, must agree with it.
    """
    omega_c = coupling.omega_c
    expected = omega_c + delta
    if omega_0 is None:
        omega_0 = expected
    elif abs(omega_0 - expected) > 1e-9 * omega_c:
        raise ValidationError(
            f"omega_0 {omega_0!r} inconsistent with omega_c + delta {expected!r}"
        )
    g = gauge.coupling(g_d, omega_0, omega_c)
    return g**2 * coupling.spectral_density(omega_0) / (0.25 * coupling.kappa_c**2 + delta**2)


DEFAULT_GAUGE_VARIANTS = (
    (Gauge.DIPOLE, 0.5),
    (Gauge.COULOMB, -0.5),
    (Gauge.COULOMB, 0.0),
)


@dataclasses.dataclass(frozen=True)
class GaugeTable:
    """Perturbative and numerical rates per (gauge, exponent) variant."""

    deltas: np.ndarray
    labels: tuple
    perturbative: dict
    numeric: dict | None


def gauge_compare(deltas, g_d: float, kappa_c: float, omega_c: float = 1.0, *,
                  variants=DEFAULT_GAUGE_VARIANTS, fock_cutoff: int = 1,
                  numeric: bool = True) -> GaugeTable:
    """Rate table across gauge/exponent pairings on a detuning grid.

    Matched pairings (dipole with n = +1/2, Coulomb with n = -1/2) give the
    same physics; mismatched ones differ by powers of omega_0/omega_c and
    are included to make that visible.
    """
    deltas = np.asarray(deltas, dtype=float)
    perturbative = {}
    numeric_rates = {} if numeric else None
    labels = []
    for gauge, exponent in variants:
        label = f"{gauge.value}_n={exponent:+g}"
        labels.append(label)
        coupling = SystemBathCoupling(kappa_c=kappa_c, omega_c=omega_c, exponent=exponent)
        perturbative[label] = np.array(
            [perturbative_rate(d, g_d, gauge, coupling) for d in deltas]
        )
        if numeric:
            rates = np.empty_like(deltas)
            for i, d in enumerate(deltas):
                system = JcSystem.from_dipole(
                    g_d, gauge, omega_c + d, omega_c, fock_cutoff=fock_cutoff
                )
                liou = build_generator(system, coupling)
                rates[i] = -decay_eigenvalue(liou, g_d).real
            numeric_rates[label] = rates
    return GaugeTable(
        deltas=deltas,
        labels=tuple(labels),
        perturbative=perturbative,
        numeric=numeric_rates,
    )
