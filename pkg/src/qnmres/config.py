"""INI configuration parsing and run manifests.

A run is fully described by a flat section/key table; unknown keys are
rejected, missing ones take documented defaults, and the resolved table is
embedded in every output file so results stay reproducible from the file
alone.
"""

import configparser
import dataclasses
import datetime
import json

import numpy as np

from . import __version__
from .continuum import QnmExpansion
from .core import Gauge, GridSpec, QnmMode, SimConfig, TlsParams
from .errors import ParseError
from .spectral_density import NegativeChiPolicy, PhaseCorrection, SystemBathCoupling

# Section -> key -> default (as strings, the INI value domain).
DEFAULTS = {
    "cavity": {"omega_c": "1.0", "kappa": "0.05", "q_factor": ""},
    "tls": {"delta": "0.0", "omega_0": ""},
    "coupling": {"g_d": "0.05", "phi0": "0.03", "gauge": "coulomb"},
    "bath": {
        "model": "power-law",
        "exponent_n": "-0.5",
        "phase_corrected": "false",
        "negative_chi_policy": "clamp",
    },
    "modes": {},  # extra_1 = omega, kappa, g, phi
    "sim": {
        "fock_cutoff": "3",
        "pump_rate": "",
        "tolerance": "1e-10",
        "t_max": "4000.0",
    },
    "sweep": {"omega0_min": "0.5", "omega0_max": "1.5", "points": "1001"},
}

MATCHED_GAUGE_EXPONENTS = {Gauge.DIPOLE: 0.5, Gauge.COULOMB: -0.5}


@dataclasses.dataclass(frozen=True)
class RunConfig:
    """Validated parameter records resolved from one config table."""

    expansion: QnmExpansion
    tls: TlsParams
    gauge: Gauge
    coupling: SystemBathCoupling
    sim: SimConfig
    table: dict
    warnings: tuple

    @property
    def cavity(self) -> QnmMode:
        return self.expansion.primary

    @property
    def delta(self) -> float:
        return self.tls.detuning(self.cavity.omega)


def _as_float(section: str, key: str, raw: str) -> float:
    try:
        return float(raw)
    except ValueError:
        raise ParseError(f"[{section}] {key}: not a number: {raw!r}") from None


def _as_bool(section: str, key: str, raw: str) -> bool:
    low = raw.strip().lower()
    if low in ("true", "1", "yes", "on"):
        return True
    if low in ("false", "0", "no", "off"):
        return False
    raise ParseError(f"[{section}] {key}: not a boolean: {raw!r}")


def _merge(path, overrides):
    table = {sec: dict(keys) for sec, keys in DEFAULTS.items()}
    if path is not None:
        parser = configparser.ConfigParser()
        try:
            with open(path) as fh:
                parser.read_file(fh)
        except OSError as exc:
            raise ParseError(f"cannot read config {path}: {exc}") from None
        except configparser.Error as exc:
            raise ParseError(f"malformed config {path}: {exc}") from None
        for section in parser.sections():
            if section not in table:
                raise ParseError(f"unknown config section [{section}]")
            for key, value in parser.items(section):
                if section != "modes" and key not in table[section]:
                    raise ParseError(f"unknown key {key!r} in section [{section}]")
                table[section][key] = value
    for item in overrides or ():
        if "=" not in item:
            raise ParseError(f"override must look like section.key=value: {item!r}")
        dotted, value = item.split("=", 1)
        if "." not in dotted:
            raise ParseError(f"override must look like section.key=value: {item!r}")
        section, key = dotted.split(".", 1)
        if section not in table:
            raise ParseError(f"unknown config section [{section}]")
        if section != "modes" and key not in table[section]:
            raise ParseError(f"unknown key {key!r} in section [{section}]")
        table[section][key] = value
    return table


def parse_config(path=None, overrides=()) -> RunConfig:
    """Resolve defaults, an optional INI file, and ``section.key=value`` overrides.

    Cross-field consistency is enforced here: ``kappa`` against ``q_factor``
    when both are given, ``omega_0`` against ``delta``, and the gauge against
    the bath exponent (a mismatch is legal but warned about, since it breaks
    the equivalence of the perturbative rates).
    """
    table = _merge(path, overrides)
    warnings = []

    omega_c = _as_float("cavity", "omega_c", table["cavity"]["omega_c"])
    kappa_raw = table["cavity"]["kappa"].strip()
    q_raw = table["cavity"]["q_factor"].strip()
    if q_raw and kappa_raw:
        kappa = _as_float("cavity", "kappa", kappa_raw)
        q = _as_float("cavity", "q_factor", q_raw)
        if abs(q * kappa - omega_c) > 1e-9 * omega_c:
            raise ParseError(
                f"[cavity] kappa={kappa!r} and q_factor={q!r} disagree "
                f"(q*kappa != omega_c)"
            )
    elif q_raw:
        kappa = omega_c / _as_float("cavity", "q_factor", q_raw)
    else:
        kappa = _as_float("cavity", "kappa", kappa_raw or DEFAULTS["cavity"]["kappa"])

    g_d = _as_float("coupling", "g_d", table["coupling"]["g_d"])
    phi0 = _as_float("coupling", "phi0", table["coupling"]["phi0"])
    gauge_raw = table["coupling"]["gauge"].strip().lower()
    try:
        gauge = Gauge(gauge_raw)
    except ValueError:
        raise ParseError(f"[coupling] gauge: unknown gauge {gauge_raw!r}") from None

    primary = QnmMode(omega=omega_c, kappa=kappa, g=g_d, phi=phi0)
    extra = []
    for key in sorted(table["modes"]):
        parts = [p.strip() for p in table["modes"][key].split(",")]
        if len(parts) != 4:
            raise ParseError(
                f"[modes] {key}: expected 'omega, kappa, g, phi', got {table['modes'][key]!r}"
            )
        vals = [_as_float("modes", key, p) for p in parts]
        extra.append(QnmMode(omega=vals[0], kappa=vals[1], g=vals[2], phi=vals[3]))
    expansion = QnmExpansion((primary, *extra))

    delta_raw = table["tls"]["delta"].strip()
    omega0_raw = table["tls"]["omega_0"].strip()
    if omega0_raw and delta_raw:
        omega_0 = _as_float("tls", "omega_0", omega0_raw)
        delta = _as_float("tls", "delta", delta_raw)
        if abs(omega_0 - (omega_c + delta)) > 1e-9 * omega_c:
            raise ParseError(
                f"[tls] omega_0={omega_0!r} and delta={delta!r} disagree"
            )
    elif omega0_raw:
        omega_0 = _as_float("tls", "omega_0", omega0_raw)
    else:
        omega_0 = omega_c + _as_float("tls", "delta", delta_raw or "0.0")
    tls = TlsParams(omega_0)

    model = table["bath"]["model"].strip().lower()
    if model != "power-law":
        raise ParseError(f"[bath] model: only 'power-law' is implemented, got {model!r}")
    exponent = _as_float("bath", "exponent_n", table["bath"]["exponent_n"])
    corrected = _as_bool("bath", "phase_corrected", table["bath"]["phase_corrected"])
    policy_raw = table["bath"]["negative_chi_policy"].strip().lower()
    try:
        policy = NegativeChiPolicy(policy_raw)
    except ValueError:
        raise ParseError(
            f"[bath] negative_chi_policy: expected clamp or error, got {policy_raw!r}"
        ) from None
    phase = (
        PhaseCorrection(phi0=phi0, q_factor=omega_c / kappa) if corrected else None
    )
    coupling = SystemBathCoupling(
        kappa_c=kappa,
        omega_c=omega_c,
        exponent=exponent,
        phase_correction=phase,
        negative_chi=policy,
    )
    if MATCHED_GAUGE_EXPONENTS[gauge] != exponent:
        warnings.append(
            f"gauge={gauge.value} with exponent_n={exponent:g} is a mismatched "
            f"pairing (matched: dipole n=+0.5, coulomb n=-0.5); rates will "
            f"differ by powers of omega_0/omega_c"
        )

    pump_raw = table["sim"]["pump_rate"].strip()
    pump = _as_float("sim", "pump_rate", pump_raw) if pump_raw else 0.01 * kappa
    sim = SimConfig(
        fock_cutoff=int(_as_float("sim", "fock_cutoff", table["sim"]["fock_cutoff"])),
        pump_rate=pump,
        tolerance=_as_float("sim", "tolerance", table["sim"]["tolerance"]),
        t_max=_as_float("sim", "t_max", table["sim"]["t_max"]),
        sweep=GridSpec(
            lo=_as_float("sweep", "omega0_min", table["sweep"]["omega0_min"]),
            hi=_as_float("sweep", "omega0_max", table["sweep"]["omega0_max"]),
            count=int(_as_float("sweep", "points", table["sweep"]["points"])),
        ),
    )

    resolved = {sec: dict(keys) for sec, keys in table.items()}
    resolved["cavity"]["kappa"] = repr(kappa)
    resolved["tls"]["omega_0"] = repr(omega_0)
    resolved["sim"]["pump_rate"] = repr(pump)
    return RunConfig(
        expansion=expansion,
        tls=tls,
        gauge=gauge,
        coupling=coupling,
        sim=sim,
        table=resolved,
        warnings=tuple(warnings),
    )


@dataclasses.dataclass(frozen=True)
class RunManifest:
    """Everything needed to reproduce one output file."""

    command: str
    table: dict
    version: str = __version__
    timestamp: str = ""

    @classmethod
    def create(cls, command: str, config: RunConfig) -> "RunManifest":
        stamp = datetime.datetime.now(datetime.timezone.utc).isoformat(timespec="seconds")
        return cls(command=command, table=config.table, timestamp=stamp)

    def header_lines(self, extras: dict | None = None):
        """Comment block for CSV files; the timestamp stays out of the body."""
        lines = [
            f"# qnmres {self.version}",
            f"# command = {self.command}",
            f"# written = {self.timestamp}",
        ]
        for section in sorted(self.table):
            for key in sorted(self.table[section]):
                value = self.table[section][key]
                if value != "":
                    lines.append(f"# {section}.{key} = {value}")
        for key in sorted(extras or {}):
            lines.append(f"# {key} = {extras[key]}")
        return lines

    def to_json(self, extras: dict | None = None) -> str:
        payload = {
            "tool": "qnmres",
            "version": self.version,
            "command": self.command,
            "written": self.timestamp,
            "config": self.table,
        }
        if extras:
            payload.update(extras)
        return json.dumps(payload, indent=2, sort_keys=True, default=_jsonable)


def _jsonable(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON serializable: {type(obj).__name__}")
