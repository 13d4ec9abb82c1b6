"""Command-line interface: parameter sweeps to CSV/JSON, plus the acceptance runner.

Every file carries a ``#`` comment block with the resolved parameter table,
so a result can be reproduced from the file alone.  Bodies are written with
``repr`` floats and are byte-identical across runs of the same manifest;
only the timestamp line in the header may differ.
"""

import argparse
import concurrent.futures
import logging
import pathlib
import sys

import numpy as np

from . import __version__, acceptance
from .config import RunConfig, RunManifest, parse_config
from .continuum import rate_sweep
from .core import Gauge
from .dressed import JcSystem, analytic_single_excitation, diagonalize
from .errors import QnmresError
from .master_equation import (
    DEFAULT_GAUGE_VARIANTS,
    build_generator,
    decay_eigenvalue,
    evolve,
    gauge_compare,
    perturbative_rate,
    steady_state,
)
from .spectra import correlation, emission_spectrum, strong_coupling_suite
from .spectral_density import spectral_density_table

log = logging.getLogger(__name__)


def _cell(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return repr(float(value))


def _write_csv(path, manifest, extras, columns, rows):
    with open(path, "w") as fh:
        for line in manifest.header_lines(extras):
            fh.write(line + "\n")
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(_cell(c) for c in row) + "\n")
    log.info("wrote %s", path)


def _write_json(path, manifest, extras):
    with open(path, "w") as fh:
        fh.write(manifest.to_json(extras) + "\n")
    log.info("wrote %s", path)


def _out_dir(args) -> pathlib.Path:
    out = pathlib.Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load_config(args) -> RunConfig:
    overrides = list(args.set or [])
    if getattr(args, "gauge", None):
        overrides.append(f"coupling.gauge={args.gauge}")
    if getattr(args, "exponent", None) is not None:
        overrides.append(f"bath.exponent_n={args.exponent}")
    config = parse_config(args.config, overrides)
    for warning in config.warnings:
        log.warning("%s", warning)
    return config


def cmd_rates(args) -> int:
    config = _load_config(args)
    out = _out_dir(args)
    sweep = rate_sweep(config.expansion, config.sim.sweep.values())
    manifest = RunManifest.create("rates", config)
    extras = {
        "slope_at_resonance": repr(sweep.slope_at_resonance),
        "purcell_normalization": "gamma(omega_c), not the free-space rate",
    }
    rows = zip(
        sweep.omega_0,
        sweep.gamma,
        sweep.gamma_over_envelope,
        sweep.gamma_over_resonant,
        sweep.phase_factor,
        sweep.negative,
    )
    _write_csv(
        out / "rates.csv", manifest, extras,
        ["omega0", "gamma", "gamma_over_L", "gamma_over_gamma_res", "chi_c",
         "negative_rate_flag"],
        rows,
    )
    _write_json(out / "rates_summary.json", manifest, {
        "slope_at_resonance": sweep.slope_at_resonance,
        "negative_points": int(np.count_nonzero(sweep.negative)),
        "gamma_resonant": float(sweep.gamma[np.argmin(np.abs(sweep.omega_0 - config.cavity.omega))]),
    })
    return 0


def cmd_dressed(args) -> int:
    config = _load_config(args)
    system = JcSystem.from_dipole(
        config.cavity.g, config.gauge, config.tls.omega_0,
        config.cavity.omega, fock_cutoff=config.sim.fock_cutoff,
    )
    basis = diagonalize(system)
    pair = analytic_single_excitation(system.delta, system.g_gauge)
    print(f"delta = {system.delta!r}, g({config.gauge.value}) = {system.g_gauge!r}, "
          f"cutoff = {system.fock_cutoff}")
    print(f"analytic one-excitation pair: omega+ = {pair.omega_plus!r}, "
          f"omega- = {pair.omega_minus!r}, c+ = {pair.c_plus!r}, c- = {pair.c_minus!r}")
    print()
    print(f"{'state':>6} {'manifold':>8} {'energy':>24}")
    for k in range(basis.dim):
        print(f"{k:>6} {basis.manifold[k]:>8} {basis.energies[k]:>24.16g}")
    print()
    print("lowering elements <j|a|k> (nonzero):")
    for j in range(basis.dim):
        for k in range(basis.dim):
            if basis.lowering[j, k] != 0.0:
                print(f"  <{j}|a|{k}> = {basis.lowering[j, k]:.16g}")
    return 0


def cmd_eig(args) -> int:
    config = _load_config(args)
    out = _out_dir(args)
    omega_c = config.cavity.omega
    omegas = config.sim.sweep.values()
    g_d = config.cavity.g

    def one(omega_0):
        delta = omega_0 - omega_c
        system = JcSystem.from_dipole(g_d, config.gauge, omega_0, omega_c)
        liou = build_generator(system, config.coupling)
        lam = decay_eigenvalue(liou, g_d)
        pert = perturbative_rate(delta, g_d, config.gauge, config.coupling)
        return (delta, omega_0, lam.real, lam.imag, pert,
                abs(lam.real + pert) / pert)

    rows = _parallel_map(one, omegas, args.threads)
    manifest = RunManifest.create("eig", config)
    _write_csv(
        out / "eig.csv", manifest, None,
        ["delta", "omega0", "re_eigenvalue", "im_eigenvalue",
         "perturbative_rate", "rel_deviation"],
        rows,
    )
    worst = max(r[5] for r in rows)
    _write_json(out / "eig_summary.json", manifest, {"worst_rel_deviation": worst})
    return 0


def cmd_gauge_compare(args) -> int:
    config = _load_config(args)
    out = _out_dir(args)
    kappa = config.cavity.kappa
    omega_c = config.cavity.omega
    deltas = np.linspace(-2.0 * kappa, 2.0 * kappa, args.points)
    table = gauge_compare(
        deltas, config.cavity.g, kappa, omega_c, numeric=not args.no_numeric,
    )
    columns = ["delta", "omega0"]
    for label in table.labels:
        columns.append(f"pert_{label}")
    if table.numeric is not None:
        for label in table.labels:
            columns.append(f"num_{label}")
    rows = []
    for i, delta in enumerate(table.deltas):
        row = [delta, omega_c + delta]
        row.extend(table.perturbative[label][i] for label in table.labels)
        if table.numeric is not None:
            row.extend(table.numeric[label][i] for label in table.labels)
        rows.append(row)
    manifest = RunManifest.create("gauge-compare", config)
    _write_csv(out / "gauge_compare.csv", manifest, None, columns, rows)
    matched = {
        label: table.perturbative[label] for label in table.labels[:2]
    }
    first, second = (matched[label] for label in table.labels[:2])
    _write_json(out / "gauge_compare_summary.json", manifest, {
        "matched_pair_max_rel_diff": float(np.max(np.abs(first - second) / second)),
        "labels": list(table.labels),
    })
    return 0


INITIAL_STATES = ("excited", "photon", "ground")


def cmd_evolve(args) -> int:
    config = _load_config(args)
    out = _out_dir(args)
    system = JcSystem.from_dipole(
        config.cavity.g, config.gauge, config.tls.omega_0,
        config.cavity.omega, fock_cutoff=config.sim.fock_cutoff,
    )
    liou = build_generator(system, config.coupling, pump_rate=args.pump if args.pump is not None else 0.0)
    rho0 = np.zeros((liou.dim, liou.dim), dtype=complex)
    index = {"excited": 1, "photon": 2, "ground": 0}[args.initial]
    rho0[index, index] = 1.0
    traj = evolve(
        liou, rho0, args.t_max if args.t_max else config.sim.t_max,
        n_points=args.points, tolerance=config.sim.tolerance, method=args.method,
    )
    sp_sm = np.zeros((liou.dim, liou.dim))
    sp_sm[1::2, 1::2] = np.eye(liou.dim // 2)
    number = np.diag(np.arange(liou.dim) // 2).astype(float)
    pe = np.einsum("ij,tji->t", sp_sm, traj.states).real
    nph = np.einsum("ij,tji->t", number, traj.states).real
    traces = np.einsum("tii->t", traj.states).real
    herm = 0.5 * (traj.states + np.conj(np.transpose(traj.states, (0, 2, 1))))
    min_eigs = np.linalg.eigvalsh(herm)[:, 0]
    manifest = RunManifest.create("evolve", config)
    extras = {"initial": args.initial, "method": traj.method,
              "trace_drift": repr(traj.trace_drift)}
    _write_csv(
        out / "evolve.csv", manifest, extras,
        ["t", "P_e", "n_photon", "trace", "min_eig_rho"],
        zip(traj.times, pe, nph, traces, min_eigs),
    )
    return 0


def cmd_spectrum(args) -> int:
    config = _load_config(args)
    out = _out_dir(args)
    manifest = RunManifest.create("spectrum", config)
    if args.figure3:
        suite = strong_coupling_suite(
            q_factor=config.cavity.q_factor,
            g_d=config.cavity.g,
            phi0=config.cavity.phi,
            omega_c=config.cavity.omega,
            delta=config.delta,
            pump_rate=config.sim.pump_rate,
            gauge=config.gauge,
            fock_start=config.sim.fock_cutoff,
            t_cap=config.sim.t_max,
            threads=args.threads,
        )
        names = ("n0", "nm12", "n0_chi", "nm12_chi")
        rows = zip(
            suite.detuning, *(suite.curves[n].intensity for n in names)
        )
        _write_csv(
            out / "spectrum.csv", manifest,
            {"variants": "n0, nm12, n0_chi, nm12_chi"},
            ["detuning", "S_n0", "S_nm12", "S_n0_chi", "S_nm12_chi"],
            rows,
        )
        peak_rows = []
        for name in names:
            for p in suite.curves[name].peaks:
                peak_rows.append((name, p.position, p.height, p.fwhm))
        with open(out / "spectrum_peaks.csv", "w") as fh:
            for line in manifest.header_lines(None):
                fh.write(line + "\n")
            fh.write("curve,position,height,fwhm\n")
            for name, pos, height, fwhm in peak_rows:
                fh.write(f"{name},{pos!r},{height!r},{fwhm!r}\n")
        _write_json(out / "spectrum_summary.json", manifest, {
            "peak_ratios": suite.peak_ratios,
            "pair_diffs": suite.pair_diffs,
            "cutoffs": {n: suite.curves[n].fock_cutoff for n in names},
        })
        return 0

    system = JcSystem.from_dipole(
        config.cavity.g, config.gauge, config.tls.omega_0,
        config.cavity.omega, fock_cutoff=config.sim.fock_cutoff,
    )
    liou = build_generator(system, config.coupling, pump_rate=config.sim.pump_rate)
    rho_ss = steady_state(liou)
    corr = correlation(liou, rho_ss, t_cap=config.sim.t_max,
                       tolerance=config.sim.tolerance)
    span = 4.0 * max(config.cavity.g, config.cavity.kappa)
    detunings = np.linspace(-span, span, args.points)
    result = emission_spectrum(corr, detunings)
    extras = {"tau_max": repr(result.tau_max),
              "imag_residual": repr(result.imag_residual)}
    _write_csv(
        out / "spectrum.csv", manifest, extras,
        ["detuning", "S"],
        zip(result.detuning, result.intensity),
    )
    with open(out / "spectrum_peaks.csv", "w") as fh:
        for line in manifest.header_lines(None):
            fh.write(line + "\n")
        fh.write("position,height,fwhm\n")
        for p in result.peaks:
            fh.write(f"{p.position!r},{p.height!r},{p.fwhm!r}\n")
    return 0


def cmd_sd_curves(args) -> int:
    config = _load_config(args)
    out = _out_dir(args)
    phi0_values = [float(x) for x in args.phi0.split(",")]
    omegas = config.sim.sweep.values()
    # The curve family is the sub-Ohmic form with the phase correction; the
    # phase is the column variable, not the config value.
    table = spectral_density_table(
        phi0_values, omegas,
        kappa_c=config.cavity.kappa, omega_c=config.cavity.omega,
        exponent=-0.5,
    )
    manifest = RunManifest.create("sd-curves", config)
    columns = ["omega_over_omegac"] + [f"J_over_kappa_phi0={p:g}" for p in phi0_values]
    rows = zip(omegas / config.cavity.omega, *(table[:, i] for i in range(table.shape[1])))
    _write_csv(out / "sd_curves.csv", manifest, {"phi0_values": args.phi0}, columns, rows)
    return 0


def cmd_accept(args) -> int:
    config = _load_config(args)
    out = _out_dir(args)
    results = acceptance.run_all(threads=args.threads)
    for res in results:
        print(res.line())
    manifest = RunManifest.create("accept", config)
    _write_json(out / "accept_report.json", manifest, {
        "criteria": [
            {
                "number": r.number,
                "name": r.name,
                "passed": r.passed,
                "elapsed_s": round(r.elapsed, 3),
                "details": _jsonable_details(r.details),
            }
            for r in results
        ],
        "all_passed": all(r.passed for r in results),
    })
    return 0 if all(r.passed for r in results) else 1


def _jsonable_details(details: dict) -> dict:
    out = {}
    for key, value in details.items():
        if isinstance(value, dict):
            out[key] = {str(k): v for k, v in value.items()}
        elif isinstance(value, tuple):
            out[key] = list(value)
        else:
            out[key] = value
    return out


def _parallel_map(fn, items, threads):
    if threads and threads > 1:
        with concurrent.futures.ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(fn, items))
    return [fn(x) for x in items]


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=None, help="INI parameter file")
    common.add_argument("--out", default=".", help="output directory")
    common.add_argument("--set", action="append", metavar="SECTION.KEY=VALUE",
                        help="override one config value (repeatable)")
    common.add_argument("--threads", type=int, default=1)
    common.add_argument("--gauge", choices=[g.value for g in Gauge], default=None)
    common.add_argument("--exponent", type=float, default=None,
                        help="bath power-law exponent n")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(
        prog="qnmres",
        description="decay rates, master equations, and spectra for a lossy cavity mode",
    )
    parser.add_argument("--version", action="version", version=f"qnmres {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("rates", parents=[common],
                   help="rate sweep over emitter frequency").set_defaults(fn=cmd_rates)
    sub.add_parser("dressed", parents=[common],
                   help="print the dressed-state table").set_defaults(fn=cmd_dressed)
    sub.add_parser("eig", parents=[common],
                   help="decay eigenvalue vs perturbative rate").set_defaults(fn=cmd_eig)

    p = sub.add_parser("gauge-compare", parents=[common],
                       help="rates across gauge/exponent pairings")
    p.add_argument("--points", type=int, default=9)
    p.add_argument("--no-numeric", action="store_true")
    p.set_defaults(fn=cmd_gauge_compare)

    p = sub.add_parser("evolve", parents=[common], help="propagate a density matrix")
    p.add_argument("--initial", choices=INITIAL_STATES, default="excited")
    p.add_argument("--t-max", type=float, default=None)
    p.add_argument("--points", type=int, default=501)
    p.add_argument("--pump", type=float, default=None)
    p.add_argument("--method", choices=["auto", "expm", "dop853", "rk45"],
                   default="auto")
    p.set_defaults(fn=cmd_evolve)

    p = sub.add_parser("spectrum", parents=[common], help="emission spectrum")
    p.add_argument("--figure3", action="store_true",
                   help="four-variant strong-coupling preset")
    p.add_argument("--points", type=int, default=801)
    p.set_defaults(fn=cmd_spectrum)

    p = sub.add_parser("sd-curves", parents=[common],
                       help="normalized spectral-density curve family")
    p.add_argument("--phi0", default="0,0.01,0.03,0.1",
                   help="comma-separated phase list")
    p.set_defaults(fn=cmd_sd_curves)

    sub.add_parser("accept", parents=[common],
                   help="run the acceptance criteria").set_defaults(fn=cmd_accept)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.fn(args)
    except QnmresError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
