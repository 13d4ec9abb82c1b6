"""INI parsing, override merging, and the command-line entry points."""

import json
import math

import numpy as np
import pytest

from qnmres import cli
from qnmres.config import parse_config
from qnmres.core import Gauge
from qnmres.errors import ParseError
from qnmres.spectral_density import NegativeChiPolicy


def test_defaults():
    config = parse_config()
    cavity = config.cavity
    assert (cavity.omega, cavity.kappa, cavity.g, cavity.phi) == (1.0, 0.05, 0.05, 0.03)
    assert config.gauge is Gauge.COULOMB
    assert config.coupling.exponent == -0.5
    assert config.coupling.phase_correction is None
    assert config.sim.pump_rate == pytest.approx(5e-4)  # 0.01 kappa
    assert config.sim.sweep.count == 1001
    assert config.warnings == ()  # coulomb with n = -1/2 is the matched pair


def test_config_file(tmp_path):
    path = tmp_path / "run.ini"
    path.write_text(
        "[cavity]\nomega_c = 2.0\nkappa =\nq_factor = 25\n"
        "[tls]\nomega_0 = 2.1\ndelta =\n"
        "[coupling]\ng_d = 0.01\ngauge = dipole\n"
        "[bath]\nexponent_n = 0.5\nphase_corrected = true\nnegative_chi_policy = error\n"
        "[modes]\nextra_1 = 2.9, 0.4, 0.02, -0.1\n"
        "[sim]\npump_rate = 1e-3\n"
    )
    config = parse_config(str(path))
    assert config.cavity.omega == 2.0
    assert config.cavity.kappa == pytest.approx(2.0 / 25.0)
    assert config.delta == pytest.approx(0.1)
    assert config.gauge is Gauge.DIPOLE
    assert config.coupling.negative_chi is NegativeChiPolicy.ERROR
    pc = config.coupling.phase_correction
    assert pc is not None and pc.q_factor == pytest.approx(25.0)
    assert len(config.expansion.modes) == 2
    assert config.expansion.modes[1].omega == 2.9
    assert config.sim.pump_rate == 1e-3
    assert config.warnings == ()  # dipole with n = +1/2 is matched


def test_overrides():
    config = parse_config(overrides=["coupling.g_d=0.002", "sweep.points=11"])
    assert config.cavity.g == 0.002
    assert config.sim.sweep.count == 11


def test_mismatched_gauge_warns():
    config = parse_config(overrides=["coupling.gauge=dipole"])  # exponent stays -1/2
    assert len(config.warnings) == 1
    assert "mismatched" in config.warnings[0]


@pytest.mark.parametrize("overrides", [
    ["cavity.q_factor=25"],                 # disagrees with the default kappa
    ["tls.omega_0=1.2"],                    # disagrees with the default delta
    ["bath.model=ohmic"],
    ["bath.phase_corrected=maybe"],
    ["bath.negative_chi_policy=ignore"],
    ["coupling.gauge=landau"],
    ["coupling.g_d=abc"],
    ["nosuch.key=1"],
    ["cavity.nosuch=1"],
    ["malformed"],
])
def test_bad_values_raise(overrides):
    with pytest.raises(ParseError):
        parse_config(overrides=overrides)


def test_bad_config_files(tmp_path):
    bad_section = tmp_path / "a.ini"
    bad_section.write_text("[nosuch]\nx = 1\n")
    with pytest.raises(ParseError):
        parse_config(str(bad_section))
    bad_mode = tmp_path / "b.ini"
    bad_mode.write_text("[modes]\nextra_1 = 1.0, 0.1\n")
    with pytest.raises(ParseError):
        parse_config(str(bad_mode))
    with pytest.raises(ParseError):
        parse_config(str(tmp_path / "missing.ini"))


def read_csv(path):
    header, columns, rows = [], None, []
    with open(path) as fh:
        for line in fh:
            line = line.rstrip("\n")
            if line.startswith("#"):
                header.append(line)
            elif columns is None:
                columns = line.split(",")
            else:
                rows.append(line.split(","))
    return header, columns, rows


def body_lines(path):
    # Everything except the timestamp comment must be reproducible.
    with open(path) as fh:
        return [line for line in fh if not line.startswith("# written")]


def test_rates_cli(tmp_path):
    out_a, out_b = tmp_path / "a", tmp_path / "b"
    assert cli.main(["rates", "--out", str(out_a)]) == 0
    assert cli.main(["rates", "--out", str(out_b)]) == 0
    header, columns, rows = read_csv(out_a / "rates.csv")
    assert columns == ["omega0", "gamma", "gamma_over_L", "gamma_over_gamma_res",
                       "chi_c", "negative_rate_flag"]
    assert len(rows) == 1001
    assert any(line.startswith("# command = rates") for line in header)
    assert any(line.startswith("# slope_at_resonance") for line in header)
    assert body_lines(out_a / "rates.csv") == body_lines(out_b / "rates.csv")
    summary = json.loads((out_a / "rates_summary.json").read_text())
    expected_slope = 1.0 - 2.0 * 20.0 * math.tan(0.06)
    assert summary["slope_at_resonance"] == pytest.approx(expected_slope, abs=1e-6)
    assert summary["negative_points"] > 0  # phi0 = 0.03 crosses its root in band
    flags = np.array([int(r[5]) for r in rows])
    assert flags.sum() == summary["negative_points"]


def test_sd_curves_cli(tmp_path):
    assert cli.main(["sd-curves", "--out", str(tmp_path), "--phi0", "0,0.03"]) == 0
    _header, columns, rows = read_csv(tmp_path / "sd_curves.csv")
    assert columns == ["omega_over_omegac", "J_over_kappa_phi0=0", "J_over_kappa_phi0=0.03"]
    ratio = np.array([float(r[0]) for r in rows])
    bare = np.array([float(r[1]) for r in rows])
    np.testing.assert_allclose(bare, 1.0 / ratio, rtol=4 * np.finfo(float).eps)


def test_dressed_cli(capsys):
    assert cli.main(["dressed", "--set", "tls.delta=0.15"]) == 0
    out = capsys.readouterr().out
    assert "analytic one-excitation pair" in out
    assert "lowering elements" in out


def test_evolve_cli(tmp_path):
    assert cli.main([
        "evolve", "--out", str(tmp_path), "--t-max", "50", "--points", "26",
        "--initial", "excited",
    ]) == 0
    _header, columns, rows = read_csv(tmp_path / "evolve.csv")
    assert columns == ["t", "P_e", "n_photon", "trace", "min_eig_rho"]
    traces = np.array([float(r[3]) for r in rows])
    np.testing.assert_allclose(traces, 1.0, atol=1e-10)
    assert float(rows[0][1]) == pytest.approx(1.0)


def test_eig_cli(tmp_path):
    assert cli.main([
        "eig", "--out", str(tmp_path), "--threads", "2",
        "--set", "coupling.g_d=0.002",
        "--set", "sweep.omega0_min=0.98", "--set", "sweep.omega0_max=1.02",
        "--set", "sweep.points=3",
    ]) == 0
    _header, columns, rows = read_csv(tmp_path / "eig.csv")
    assert columns == ["delta", "omega0", "re_eigenvalue", "im_eigenvalue",
                       "perturbative_rate", "rel_deviation"]
    devs = [float(r[5]) for r in rows]
    assert max(devs) < 0.02
    summary = json.loads((tmp_path / "eig_summary.json").read_text())
    assert summary["worst_rel_deviation"] == pytest.approx(max(devs))


def test_gauge_compare_cli(tmp_path):
    assert cli.main([
        "gauge-compare", "--out", str(tmp_path), "--points", "3", "--no-numeric",
    ]) == 0
    _header, columns, rows = read_csv(tmp_path / "gauge_compare.csv")
    assert columns[:2] == ["delta", "omega0"]
    assert all(c.startswith("pert_") for c in columns[2:])
    assert len(columns) == 5 and len(rows) == 3
    for row in rows:
        matched_dip, matched_cou = float(row[2]), float(row[3])
        assert matched_dip == pytest.approx(matched_cou, rel=1e-12)


def test_spectrum_cli(tmp_path):
    assert cli.main(["spectrum", "--out", str(tmp_path), "--points", "401"]) == 0
    _header, columns, rows = read_csv(tmp_path / "spectrum.csv")
    assert columns == ["detuning", "S"]
    assert len(rows) == 401
    intensity = np.array([float(r[1]) for r in rows])
    assert intensity.max() == pytest.approx(1.0)
    _ph, pcols, prows = read_csv(tmp_path / "spectrum_peaks.csv")
    assert pcols == ["position", "height", "fwhm"]
    # Strong coupling at the defaults: a doublet straddling zero detuning.
    positions = [float(r[0]) for r in prows]
    assert min(positions) < 0 < max(positions)


def test_spectrum_figure3_cli(tmp_path):
    assert cli.main([
        "spectrum", "--figure3", "--threads", "2", "--out", str(tmp_path),
    ]) == 0
    _header, columns, rows = read_csv(tmp_path / "spectrum.csv")
    assert columns == ["detuning", "S_n0", "S_nm12", "S_n0_chi", "S_nm12_chi"]
    assert len(rows) == 801
    summary = json.loads((tmp_path / "spectrum_summary.json").read_text())
    assert set(summary["peak_ratios"]) == {"n0", "nm12", "n0_chi", "nm12_chi"}
    assert summary["pair_diffs"]["n0|n0_chi"] > 1e-2


def test_cli_error_paths(tmp_path, capsys):
    # A config-level failure is a clean exit 1 with a message on stderr.
    assert cli.main(["rates", "--out", str(tmp_path), "--set", "cavity.kappa=-1"]) == 1
    assert "NonPositiveLinewidth" in capsys.readouterr().err
    assert cli.main(["rates", "--config", str(tmp_path / "none.ini")]) == 1
    assert "ParseError" in capsys.readouterr().err
    with pytest.raises(SystemExit) as info:
        cli.main(["no-such-command"])
    assert info.value.code == 2
    with pytest.raises(SystemExit) as info:
        cli.main(["--version"])
    assert info.value.code == 0
