"""Command-line interface: config files, unit conversion, CSV output.

Config format (INI, ``schema = 1``).  Each component is parameterized
either dimensionlessly or physically (SI), never a mix, and the whole
circuit must use one style so energy ratios are well defined::

    [meta]
    schema = 1

    [coupler]
    beta_c = 0.75
    zeta_c = 0.05
    e_ltc = 3.0
    phi_cx = 0.0

    [qubit.1]
    beta_j = 1.05
    zeta_j = 0.05
    alpha_j = 0.05
    phi_jx = 0.0

    [numerics]
    nu_max = 100
    mu_max = 40
    n_basis = 60
    n_levels = 4
    parallel = 1

    [units]
    e_l1_ghz = 200

    [sweep]
    axis = beta_j
    lo = 0.5
    hi = 1.4
    n_points = 7
    theories = exact,NA,LA,LN

    [scan]
    labels = xx,xz,zz
    lo = 0.0
    hi = 0.1
    n_points = 41

The physical alternative gives the coupler ``l_c, c, i_c`` and each
qubit ``l_j, c_j, i_j, m_j`` (henry, farad, ampere).  Internally all
energies are in units of the first qubit's inductive energy E_L1; the
optional ``e_l1_ghz`` adds presentation-only GHz/MHz columns.

Flux biases (``phi_cx``, ``phi_jx``, sweep/scan ranges on bias axes)
are written in units of 2*pi.  Note the sign convention: the junction
term enters the potential as +beta cos(phi), i.e. the stored bias is
pi-shifted relative to the raw loop flux, so phi_cx = 0 is the
maximum-coupling point.

Exit codes: 0 success, 1 configuration error, 2 numeric failure,
3 validation failure.  Errors print one machine-readable JSON object
on stderr.
"""

import argparse
import configparser
import json
import math
import os
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .bench import CouplerSystem, SweepSpec, coupling_scan, sweep
from .coupler import (
    CouplerParams,
    b_coeffs,
    eg_derivs_analytic,
    eg_derivs_numeric,
    eg_eval,
    eg_exact,
    min_nu_for_error,
    truncation_bound,
    u_min,
    u_zpe_harmonic,
)
from .errors import ConfigurationError, NumericError, ResourceError
from .kapteyn import cos_beta, kepler_solve, sin_beta
from .projection import QubitParams, couplings, gxx_quadrature, qubit_subspace

__all__ = [
    "SystemConfig",
    "from_physical",
    "load_config",
    "main",
    "run",
    "to_physical",
]

PLANCK = 6.62607015e-34
E_CHARGE = 1.602176634e-19
PHI_0 = PLANCK / (2.0 * E_CHARGE)
TWO_PI = 2.0 * math.pi

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NUMERIC = 2
EXIT_VALIDATION = 3

SCHEMA_VERSION = 1

_COUPLER_DIMLESS = ("beta_c", "zeta_c", "e_ltc")
_COUPLER_PHYSICAL = ("l_c", "c", "i_c")
_QUBIT_DIMLESS = ("beta_j", "zeta_j", "alpha_j", "e_lj")
_QUBIT_PHYSICAL = ("l_j", "c_j", "i_j", "m_j")

_NUMERIC_DEFAULTS = {
    "nu_max": 100,
    "mu_max": 40,
    "n_basis": 60,
    "n_levels": 4,
    "parallel": 1,
    "dims": None,
    "bo_dims": None,
}


# ------------------------------------------------------- unit conversion


def from_physical(coupler: dict, qubits: list) -> dict:
    """Dimensionless circuit parameters from SI values.

    coupler holds l_c, c, i_c and each qubit l_j, c_j, i_j, m_j.  The
    mutual inductances renormalize the coupler inductance, which must
    stay positive; the flux quantum h/2e absorbs all remaining units.
    Returns beta/zeta/alpha/e_lj per component plus e_l1_joule, the
    global energy unit.
    """
    phi_red = PHI_0 / TWO_PI
    for key in _COUPLER_PHYSICAL:
        if coupler.get(key, 0.0) <= 0.0:
            raise ConfigurationError(f"coupler {key} must be positive")
    out_qubits = []
    alphas = []
    for i, q in enumerate(qubits, start=1):
        for key in ("l_j", "c_j", "i_j"):
            if q.get(key, 0.0) <= 0.0:
                raise ConfigurationError(f"qubit {i} {key} must be positive")
        alphas.append(q.get("m_j", 0.0) / q["l_j"])
    l_tilde = coupler["l_c"] - sum(a * q.get("m_j", 0.0) for a, q in zip(alphas, qubits))
    if l_tilde <= 0.0:
        raise ConfigurationError(
            "mutual inductances exceed the coupler inductance; the rescaled "
            f"coupler inductance must be positive, got {l_tilde:g} H"
        )
    beta_c = TWO_PI * l_tilde * coupler["i_c"] / PHI_0
    if beta_c >= 1.0:
        raise ConfigurationError(
            f"beta_c = {beta_c:g} violates the monostability condition beta_c < 1"
        )
    e_l = [phi_red**2 / q["l_j"] for q in qubits]
    for i, (q, alpha) in enumerate(zip(qubits, alphas), start=1):
        out_qubits.append(
            {
                "beta_j": TWO_PI * q["l_j"] * q["i_j"] / PHI_0,
                "zeta_j": (TWO_PI * E_CHARGE / PHI_0) * math.sqrt(q["l_j"] / q["c_j"]),
                "alpha_j": alpha,
                "e_lj": e_l[i - 1] / e_l[0],
            }
        )
    return {
        "beta_c": beta_c,
        "zeta_c": (TWO_PI * E_CHARGE / PHI_0) * math.sqrt(l_tilde / coupler["c"]),
        "e_ltc": (phi_red**2 / l_tilde) / e_l[0],
        "qubits": out_qubits,
        "e_l1_joule": e_l[0],
    }


def to_physical(beta_c: float, zeta_c: float, e_ltc: float, qubits: list,
                l_1: float = 1.0) -> dict:
    """Synthetic SI values that reproduce the given dimensionless set.

    The first qubit's inductance is fixed at l_1; everything else
    follows by inverting the parameter definitions.  Useful as the
    round-trip oracle for from_physical.
    """
    imp = TWO_PI * E_CHARGE / PHI_0  # sqrt(L/C) prefactor
    out_qubits = []
    for q in qubits:
        l_j = l_1 / q.get("e_lj", 1.0)
        out_qubits.append(
            {
                "l_j": l_j,
                "c_j": l_j * (imp / q["zeta_j"]) ** 2,
                "i_j": q["beta_j"] * PHI_0 / (TWO_PI * l_j),
                "m_j": q.get("alpha_j", 0.0) * l_j,
            }
        )
    l_tilde = l_1 / e_ltc
    coupler = {
        "l_c": l_tilde + sum(
            q.get("alpha_j", 0.0) * oq["m_j"] for q, oq in zip(qubits, out_qubits)
        ),
        "c": l_tilde * (imp / zeta_c) ** 2,
        "i_c": beta_c * PHI_0 / (TWO_PI * l_tilde),
    }
    return {"coupler": coupler, "qubits": out_qubits}


# ------------------------------------------------------------- config file


@dataclass(frozen=True)
class SystemConfig:
    """Parsed experiment configuration.

    system carries the dimensionless circuit; numerics/units/sweep/scan
    mirror the file sections with defaults applied.  The coupler
    attributes are exposed directly so the object can stand in
    wherever a bare circuit description is expected.
    """

    system: CouplerSystem
    numerics: dict
    units: dict = field(default_factory=dict)
    sweep: dict = None
    scan: dict = None
    source: str = ""

    @property
    def beta_c(self):
        return self.system.beta_c

    @property
    def zeta_c(self):
        return self.system.zeta_c

    @property
    def phi_cx(self):
        return self.system.phi_cx

    @property
    def e_ltc(self):
        return self.system.e_ltc

    @property
    def qubits(self):
        return self.system.qubits


def _section_floats(section) -> dict:
    out = {}
    for key in section:
        try:
            out[key] = float(section[key])
        except ValueError as exc:
            raise ConfigurationError(f"bad numeric value for {key!r}: {section[key]!r}") from exc
    return out


def _check_style(name: str, present: dict, dimless_keys, physical_keys):
    has_dim = [k for k in dimless_keys if k in present]
    has_phys = [k for k in physical_keys if k in present]
    if has_dim and has_phys:
        raise ConfigurationError(
            f"{name} mixes dimensionless ({has_dim}) and physical ({has_phys}) "
            "parameters; pick one style per component"
        )
    if not has_dim and not has_phys:
        raise ConfigurationError(f"{name} has no recognizable parameters")
    if has_phys:
        missing = [k for k in physical_keys if k not in present and k != "m_j"]
        if missing:
            raise ConfigurationError(f"{name} physical parameterization misses {missing}")
        return "physical"
    return "dimensionless"


def _parse_int_list(text: str):
    try:
        return tuple(int(p) for p in text.split(",") if p.strip())
    except ValueError as exc:
        raise ConfigurationError(f"bad integer list {text!r}") from exc


def load_config(path) -> SystemConfig:
    """Read and validate an INI config; see the module docstring."""
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    read = parser.read(path)
    if not read:
        raise ConfigurationError(f"config file not found: {path}")
    if not parser.has_section("meta") or parser.get("meta", "schema", fallback=None) is None:
        raise ConfigurationError("config needs a [meta] section with schema = 1")
    schema = parser.getint("meta", "schema")
    if schema != SCHEMA_VERSION:
        raise ConfigurationError(f"unsupported schema {schema}, expected {SCHEMA_VERSION}")
    if not parser.has_section("coupler"):
        raise ConfigurationError("config needs a [coupler] section")

    qubit_sections = []
    for name in parser.sections():
        if name.startswith("qubit."):
            suffix = name.split(".", 1)[1]
            try:
                qubit_sections.append((int(suffix), name))
            except ValueError as exc:
                raise ConfigurationError(f"bad qubit section name [{name}]") from exc
    qubit_sections.sort()
    if not qubit_sections:
        raise ConfigurationError("config needs at least one [qubit.N] section")

    coupler_vals = _section_floats(parser["coupler"])
    qubit_vals = [_section_floats(parser[name]) for _, name in qubit_sections]

    style = _check_style("[coupler]", coupler_vals, _COUPLER_DIMLESS, _COUPLER_PHYSICAL)
    for (idx, name), vals in zip(qubit_sections, qubit_vals):
        q_style = _check_style(f"[{name}]", vals, _QUBIT_DIMLESS, _QUBIT_PHYSICAL)
        if q_style != style:
            raise ConfigurationError(
                f"[{name}] is {q_style} while [coupler] is {style}; the whole "
                "circuit must use one parameterization"
            )

    e_l1_joule = None
    if style == "physical":
        derived = from_physical(coupler_vals, qubit_vals)
        e_l1_joule = derived["e_l1_joule"]
        beta_c, zeta_c, e_ltc = derived["beta_c"], derived["zeta_c"], derived["e_ltc"]
        qubit_params = []
        for vals, dq in zip(qubit_vals, derived["qubits"]):
            qubit_params.append(
                QubitParams(
                    beta_j=dq["beta_j"],
                    zeta_j=dq["zeta_j"],
                    e_lj=dq["e_lj"],
                    alpha_j=dq["alpha_j"],
                    phi_jx=TWO_PI * vals.get("phi_jx", 0.0),
                )
            )
    else:
        missing = [k for k in ("beta_c", "zeta_c") if k not in coupler_vals]
        if missing:
            raise ConfigurationError(f"[coupler] misses {missing}")
        beta_c = coupler_vals["beta_c"]
        zeta_c = coupler_vals["zeta_c"]
        e_ltc = coupler_vals.get("e_ltc", 1.0)
        qubit_params = []
        for (idx, name), vals in zip(qubit_sections, qubit_vals):
            missing = [k for k in ("beta_j", "zeta_j") if k not in vals]
            if missing:
                raise ConfigurationError(f"[{name}] misses {missing}")
            e_lj = vals.get("e_lj", 1.0)
            if idx == qubit_sections[0][0] and e_lj != 1.0:
                raise ConfigurationError(
                    "the first qubit defines the energy unit; its e_lj must be 1"
                )
            qubit_params.append(
                QubitParams(
                    beta_j=vals["beta_j"],
                    zeta_j=vals["zeta_j"],
                    e_lj=e_lj,
                    alpha_j=vals.get("alpha_j", 0.0),
                    phi_jx=TWO_PI * vals.get("phi_jx", 0.0),
                )
            )

    system = CouplerSystem(
        beta_c=beta_c,
        zeta_c=zeta_c,
        qubits=tuple(qubit_params),
        e_ltc=e_ltc,
        phi_cx=TWO_PI * coupler_vals.get("phi_cx", 0.0),
    )

    numerics = dict(_NUMERIC_DEFAULTS)
    if parser.has_section("numerics"):
        sec = parser["numerics"]
        for key in ("nu_max", "mu_max", "n_basis", "n_levels", "parallel"):
            if key in sec:
                numerics[key] = sec.getint(key)
        for key in ("dims", "bo_dims"):
            if key in sec:
                numerics[key] = _parse_int_list(sec[key])
    for key in ("nu_max", "mu_max", "n_basis", "n_levels", "parallel"):
        if numerics[key] < 1:
            raise ConfigurationError(f"numerics {key} must be >= 1, got {numerics[key]}")

    units = {}
    if parser.has_section("units") and "e_l1_ghz" in parser["units"]:
        ghz = parser.getfloat("units", "e_l1_ghz")
        if ghz <= 0.0:
            raise ConfigurationError(f"e_l1_ghz must be positive, got {ghz}")
        units["e_l1_ghz"] = ghz
    if e_l1_joule is not None:
        derived_ghz = e_l1_joule / PLANCK / 1e9
        stated = units.get("e_l1_ghz")
        if stated is not None and abs(stated - derived_ghz) > 1e-6 * derived_ghz:
            raise ConfigurationError(
                f"[units] e_l1_ghz = {stated:g} conflicts with the physical "
                f"parameters ({derived_ghz:g} GHz)"
            )
        units["e_l1_ghz"] = derived_ghz

    sweep_cfg = None
    if parser.has_section("sweep"):
        sec = parser["sweep"]
        try:
            sweep_cfg = {
                "axis": sec.get("axis"),
                "lo": sec.getfloat("lo"),
                "hi": sec.getfloat("hi"),
                "n_points": sec.getint("n_points"),
                "theories": tuple(
                    t.strip() for t in sec.get("theories", "exact,NA,LA,LN").split(",")
                ),
                "n_levels": sec.getint("n_levels", numerics["n_levels"]),
            }
        except ValueError as exc:
            raise ConfigurationError(f"bad [sweep] value: {exc}") from exc
        for key in ("axis", "lo", "hi", "n_points"):
            if sweep_cfg[key] is None:
                raise ConfigurationError(f"[sweep] needs {key}")

    scan_cfg = None
    if parser.has_section("scan"):
        sec = parser["scan"]
        try:
            scan_cfg = {
                "labels": [t.strip() for t in sec.get("labels", "all").split(",")],
                "lo": sec.getfloat("lo", 0.0),
                "hi": sec.getfloat("hi", 0.5),
                "n_points": sec.getint("n_points", 41),
            }
        except ValueError as exc:
            raise ConfigurationError(f"bad [scan] value: {exc}") from exc
        if scan_cfg["labels"] == ["all"]:
            scan_cfg["labels"] = "all"

    return SystemConfig(
        system=system,
        numerics=numerics,
        units=units,
        sweep=sweep_cfg,
        scan=scan_cfg,
        source=str(path),
    )


# --------------------------------------------------------------- CSV output


def _fmt(value) -> str:
    if isinstance(value, str):
        return value.replace(",", ";")
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return f"{float(value):.17g}"


def _echo_lines(cfg: SystemConfig, command: str, extra: dict = ()) -> list:
    sys_ = cfg.system
    lines = [
        f"coupler-lab {__version__} command={command}",
        f"config={cfg.source}",
        f"coupler: beta_c={_fmt(sys_.beta_c)} zeta_c={_fmt(sys_.zeta_c)} "
        f"e_ltc={_fmt(sys_.e_ltc)} phi_cx={_fmt(sys_.phi_cx)} rad",
    ]
    for i, q in enumerate(sys_.qubits, start=1):
        lines.append(
            f"qubit.{i}: beta_j={_fmt(q.beta_j)} zeta_j={_fmt(q.zeta_j)} "
            f"e_lj={_fmt(q.e_lj)} alpha_j={_fmt(q.alpha_j)} phi_jx={_fmt(q.phi_jx)} rad"
        )
    lines.append(
        "numerics: "
        + " ".join(f"{k}={v}" for k, v in sorted(cfg.numerics.items()) if v is not None)
    )
    if cfg.units:
        lines.append(f"units: e_l1_ghz={_fmt(cfg.units['e_l1_ghz'])}")
    else:
        lines.append("units: dimensionless (energies in E_L1)")
    for key, value in dict(extra).items():
        lines.append(f"{key}={value}")
    return lines


def _write_csv(path: Path, header_lines, columns: dict):
    names = list(columns)
    rows = list(zip(*columns.values())) if names else []
    with open(path, "w") as fh:
        for line in header_lines:
            fh.write(f"# {line}\n")
        fh.write(",".join(names) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")
    return path


def _mhz(cfg: SystemConfig, values):
    # presentation-only: E_L1 units -> MHz
    ghz = cfg.units.get("e_l1_ghz")
    if ghz is None:
        return None
    return np.asarray(values, dtype=float) * ghz * 1e3


# ----------------------------------------------------------------- commands


def _cmd_series(cfg, args, out: Path) -> int:
    """series: sine/cosine profiles and the interaction coefficients.

    Writes series_profile.csv (phi_over_2pi, phi, sin_phi, sin_beta,
    cos_beta) and series_coefficients.csv (nu, b_classical, b_quantum,
    b_total).
    """
    beta, zeta = cfg.beta_c, cfg.zeta_c
    nu_max, mu_max = cfg.numerics["nu_max"], cfg.numerics["mu_max"]
    phi = np.linspace(0.0, TWO_PI, args.n_grid)
    profile = {
        "phi_over_2pi": phi / TWO_PI,
        "phi": phi,
        "sin_phi": np.sin(phi),
        "sin_beta": np.asarray([sin_beta(beta, p, nu_max=nu_max) for p in phi]),
        "cos_beta": np.asarray([cos_beta(beta, p, nu_max=nu_max) for p in phi]),
    }
    series = b_coeffs(beta, zeta, nu_max=nu_max, mu_max=mu_max)
    coeffs = {
        "nu": np.arange(nu_max + 1),
        "b_classical": series.b_classical.coeffs,
        "b_quantum": series.b_quantum.coeffs,
        "b_total": series.coeffs,
    }
    echo = _echo_lines(cfg, "series", {"n_grid": args.n_grid})
    p1 = _write_csv(out / "series_profile.csv", echo, profile)
    p2 = _write_csv(out / "series_coefficients.csv", echo, coeffs)
    print(p1)
    print(p2)
    return EXIT_OK


def _bias_grid(args) -> np.ndarray:
    if not args.lo < args.hi:
        raise ConfigurationError(f"grid needs lo < hi, got ({args.lo}, {args.hi})")
    if args.n_grid < 2:
        raise ConfigurationError(f"grid needs >= 2 points, got {args.n_grid}")
    return TWO_PI * np.linspace(args.lo, args.hi, args.n_grid)


def _cmd_eg(cfg, args, out: Path) -> int:
    """eg: ground-energy curves over the coupler bias.

    Writes eg.csv with the classical minimum, the harmonic zero-point
    term, the Fourier-series total, the exact diagonalization, and the
    exact-minus-classical remainder (all in E_Ltc units).
    """
    beta, zeta = cfg.beta_c, cfg.zeta_c
    grid = _bias_grid(args)
    series = b_coeffs(beta, zeta, cfg.numerics["nu_max"], cfg.numerics["mu_max"])
    params = CouplerParams(beta_c=beta, zeta_c=zeta)
    classical = np.asarray([u_min(beta, p, nu_max=cfg.numerics["nu_max"]) for p in grid])
    zpe = np.asarray([u_zpe_harmonic(beta, zeta, p) for p in grid])
    exact = np.asarray(
        [eg_exact(params, p, n_basis=max(50, cfg.numerics["n_basis"]))[0] for p in grid]
    )
    columns = {
        "phi_over_2pi": grid / TWO_PI,
        "u_min": classical,
        "zpe_harmonic": zpe,
        "eg_series": eg_eval(series, grid),
        "eg_exact": exact,
        "zpe_exact": exact - classical,
    }
    path = _write_csv(out / "eg.csv", _echo_lines(cfg, "eg", {"n_grid": args.n_grid}), columns)
    print(path)
    return EXIT_OK


def _cmd_derivs(cfg, args, out: Path) -> int:
    """derivs: first/second bias derivatives of the ground energy.

    Writes derivs.csv comparing the closed-form route against exact
    diagonalization plus perturbation theory.
    """
    beta, zeta = cfg.beta_c, cfg.zeta_c
    grid = _bias_grid(args)
    params = CouplerParams(beta_c=beta, zeta_c=zeta)
    ana = np.asarray([eg_derivs_analytic(beta, zeta, p) for p in grid])
    num = np.asarray(
        [eg_derivs_numeric(params, p, n_basis=max(50, cfg.numerics["n_basis"])) for p in grid]
    )
    columns = {
        "phi_over_2pi": grid / TWO_PI,
        "d1_analytic": ana[:, 0],
        "d2_analytic": ana[:, 1],
        "d1_numeric": num[:, 0],
        "d2_numeric": num[:, 1],
    }
    path = _write_csv(
        out / "derivs.csv", _echo_lines(cfg, "derivs", {"n_grid": args.n_grid}), columns
    )
    print(path)
    return EXIT_OK


def _pc_label(label: str) -> str:
    # persistent-current basis swaps the roles of x and z
    return label.translate(str.maketrans({"x": "z", "z": "x"}))


def _cmd_couplings(cfg, args, out: Path) -> int:
    """couplings: the full interaction table at the configured bias.

    Writes couplings.csv (label, value in E_L1, optional value_mhz,
    optional label_pc giving the persistent-current-basis name).
    """
    series = b_coeffs(cfg.beta_c, cfg.zeta_c, cfg.numerics["nu_max"], cfg.numerics["mu_max"])
    subs = [qubit_subspace(q, n_basis=cfg.numerics["n_basis"]) for q in cfg.qubits]
    alphas = [q.alpha_j for q in cfg.qubits]
    labels = "all" if args.labels is None else [s.strip() for s in args.labels.split(",")]
    table = couplings(
        series, subs, alphas, cfg.phi_cx, labels=labels, e_ltc=cfg.e_ltc
    )
    names = list(table.labels)
    values = np.asarray([table[k] for k in names])
    columns = {"label": names, "value_el1": values}
    mhz = _mhz(cfg, values)
    if mhz is not None:
        columns["value_mhz"] = mhz
    if args.pc_basis:
        columns["label_pc"] = [_pc_label(k) for k in names]
    extra = {"imag_residue": _fmt(table.metadata["imag_residue"])}
    if table.metadata["resonances"]:
        extra["resonances"] = len(table.metadata["resonances"])
    path = _write_csv(out / "couplings.csv", _echo_lines(cfg, "couplings", extra), columns)
    print(path)
    return EXIT_OK


def _cmd_spectrum(cfg, args, out: Path) -> int:
    """spectrum: excitation-energy sweep per the [sweep] section.

    Writes spectrum.csv: the axis column, then per theory the sorted
    excitations exc1..exc{n-1} (E_L1 units, optional MHz copies), then
    one error column per theory (empty when the point succeeded).
    """
    if cfg.sweep is None:
        raise ConfigurationError("the spectrum command needs a [sweep] section")
    lo, hi = cfg.sweep["lo"], cfg.sweep["hi"]
    if cfg.sweep["axis"] == "phi_cx":
        lo, hi = TWO_PI * lo, TWO_PI * hi
    spec = SweepSpec(
        axis=cfg.sweep["axis"],
        range=(lo, hi, cfg.sweep["n_points"]),
        system=cfg.system,
        theories=cfg.sweep["theories"],
        n_levels=cfg.sweep["n_levels"],
        dims=cfg.numerics["dims"],
        bo_dims=cfg.numerics["bo_dims"],
        nu_max=cfg.numerics["nu_max"],
        mu_max=cfg.numerics["mu_max"],
        parallel=cfg.numerics["parallel"],
    )
    result = sweep(spec)
    axis_values = result.values
    if spec.axis == "phi_cx":
        columns = {"phi_over_2pi": axis_values / TWO_PI}
    else:
        columns = {spec.axis: axis_values}
    for theory in spec.theories:
        arr = result.excitation_array(theory)
        for m in range(arr.shape[1]):
            columns[f"{theory}_exc{m + 1}"] = arr[:, m]
            mhz = _mhz(cfg, arr[:, m])
            if mhz is not None:
                columns[f"{theory}_exc{m + 1}_mhz"] = mhz
    for theory in spec.theories:
        columns[f"{theory}_error"] = [
            rec["errors"].get(theory, rec["errors"].get("system", ""))
            for rec in result.points
        ]
    extra = {"axis": spec.axis, "n_failed": result.metadata["n_failed"]}
    path = _write_csv(out / "spectrum.csv", _echo_lines(cfg, "spectrum", extra), columns)
    print(path)
    return EXIT_OK


def _cmd_scan(cfg, args, out: Path) -> int:
    """scan: coupling coefficients over a coupler-bias grid.

    Writes scan.csv: phi_over_2pi plus one g_<label> column per label
    (E_L1 units, optional MHz copies).
    """
    if cfg.scan is None:
        raise ConfigurationError("the scan command needs a [scan] section")
    result = coupling_scan(
        cfg.system,
        cfg.scan["labels"],
        (TWO_PI * cfg.scan["lo"], TWO_PI * cfg.scan["hi"], cfg.scan["n_points"]),
        nu_max=cfg.numerics["nu_max"],
        mu_max=cfg.numerics["mu_max"],
        n_basis=cfg.numerics["n_basis"],
    )
    columns = {"phi_over_2pi": result.phi_cx / TWO_PI}
    for label in result.labels:
        values = result.label_array(label)
        columns[f"g_{label}"] = values
        mhz = _mhz(cfg, values)
        if mhz is not None:
            columns[f"g_{label}_mhz"] = mhz
    path = _write_csv(out / "scan.csv", _echo_lines(cfg, "scan"), columns)
    print(path)
    return EXIT_OK


def _cmd_truncation(cfg, args, out: Path) -> int:
    """truncation: smallest series order meeting each error target.

    Prints one line per epsilon and writes truncation.csv (epsilon,
    min_nu, bound at that order).
    """
    epsilons = args.epsilon or [1e-3]
    orders = []
    bounds = []
    for eps in epsilons:
        nu = min_nu_for_error(cfg.beta_c, cfg.zeta_c, eps)
        orders.append(nu)
        bounds.append(truncation_bound(cfg.beta_c, cfg.zeta_c, nu))
        print(nu)
    columns = {
        "epsilon": np.asarray(epsilons),
        "min_nu": np.asarray(orders),
        "bound": np.asarray(bounds),
    }
    path = _write_csv(out / "truncation.csv", _echo_lines(cfg, "truncation"), columns)
    print(path)
    return EXIT_OK


def _validation_checks(cfg):
    """Built-in oracle cross-checks; yields (name, ok, detail)."""
    beta, zeta = 0.75, 0.05

    chi = np.asarray([kepler_solve(beta, p) for p in np.linspace(0, TWO_PI, 101)])
    res = np.max(np.abs(chi - np.linspace(0, TWO_PI, 101) - beta * np.sin(chi)))
    yield "kepler_residual", res <= 1e-12, f"max residual {res:.3e}"

    grid = np.linspace(0.0, TWO_PI, 101)
    series_chi = grid + beta * np.asarray([sin_beta(beta, p, nu_max=300) for p in grid])
    res = np.max(np.abs(series_chi - chi))
    yield "sin_beta_consistency", res <= 1e-9, f"max deviation {res:.3e}"

    mean = np.mean([cos_beta(beta, p, nu_max=300) for p in np.linspace(0, TWO_PI, 256, endpoint=False)])
    yield "cos_beta_period_mean", abs(mean + beta / 4) <= 1e-9, f"mean {mean:.12f}"

    n18 = min_nu_for_error(0.75, 0.25, 1e-3)
    n187 = min_nu_for_error(0.95, 0.25, 1e-3)
    yield "truncation_orders", (n18, n187) == (18, 187), f"got ({n18}, {n187})"

    levels = eg_exact(CouplerParams(beta_c=beta, zeta_c=zeta), 0.0)
    gap = levels[1] - levels[0]
    yield "coupler_gap", abs(gap - 5.3248e-2) <= 0.01 * 5.3248e-2, f"gap {gap:.6e}"

    d_ana = eg_derivs_analytic(beta, zeta, 0.3 * TWO_PI)
    d_num = eg_derivs_numeric(CouplerParams(beta_c=beta, zeta_c=zeta), 0.3 * TWO_PI)
    rel = max(abs(a - n) / abs(n) for a, n in zip(d_ana, d_num))
    yield "derivative_routes", rel <= 0.01, f"max rel {rel:.3e}"

    series = b_coeffs(0.5, zeta, nu_max=100, mu_max=40)
    sub = qubit_subspace(QubitParams(beta_j=1.05, zeta_j=0.05), n_basis=60)
    table = couplings(series, [sub, sub], [0.05, 0.05], 0.1 * TWO_PI, labels=["xx"])
    quad = gxx_quadrature(lambda x: eg_eval(series, x), [sub, sub], 0.05, 0.1 * TWO_PI)
    rel = abs(quad - table["xx"]) / abs(table["xx"])
    yield "gxx_quadrature_identity", rel <= 1e-6, f"rel {rel:.3e}"

    spec_qubits = [
        {"beta_j": q.beta_j, "zeta_j": q.zeta_j, "alpha_j": q.alpha_j, "e_lj": q.e_lj}
        for q in cfg.qubits
    ]
    phys = to_physical(cfg.beta_c, cfg.zeta_c, cfg.e_ltc, spec_qubits, l_1=1e-9)
    back = from_physical(phys["coupler"], phys["qubits"])
    errs = [
        abs(back["beta_c"] - cfg.beta_c),
        abs(back["zeta_c"] - cfg.zeta_c),
        abs(back["e_ltc"] - cfg.e_ltc) / cfg.e_ltc,
    ]
    for q, b in zip(spec_qubits, back["qubits"]):
        errs.append(abs(q["beta_j"] - b["beta_j"]))
        errs.append(abs(q["zeta_j"] - b["zeta_j"]))
        errs.append(abs(q["alpha_j"] - b["alpha_j"]))
    worst = max(errs)
    yield "physical_roundtrip", worst <= 1e-12, f"max error {worst:.3e}"


def _cmd_validate(cfg, args, out: Path) -> int:
    """validate: run the oracle cross-checks and print pass/fail lines."""
    failures = 0
    t0 = time.time()
    for name, ok, detail in _validation_checks(cfg):
        print(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")
        failures += 0 if ok else 1
    print(f"{8 - failures}/8 checks passed in {time.time() - t0:.1f}s")
    return EXIT_OK if failures == 0 else EXIT_VALIDATION


_COMMANDS = {
    "series": _cmd_series,
    "eg": _cmd_eg,
    "derivs": _cmd_derivs,
    "couplings": _cmd_couplings,
    "spectrum": _cmd_spectrum,
    "scan": _cmd_scan,
    "truncation": _cmd_truncation,
    "validate": _cmd_validate,
}


# ------------------------------------------------------------------- driver


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="coupler-lab",
        description="Qubit-qubit interactions through a nonlinear inductive coupler",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func):
        p = sub.add_parser(name, help=func.__doc__.splitlines()[0])
        p.add_argument("--config", required=True, help="INI config file")
        p.add_argument("--out", default=".", help="output directory (default: .)")
        p.add_argument("--nu-max", type=int, default=None, help="series order override")
        p.add_argument("--dims", default=None, help="exact-solve basis sizes, e.g. 40,40,18")
        p.add_argument("--parallel", type=int, default=None, help="sweep worker count")
        return p

    grid_defaults = {"series": (None, None, 721), "eg": (0.0, 0.5, 201), "derivs": (0.0, 0.5, 201)}
    p = add("series", _cmd_series)
    p.add_argument("--n-grid", type=int, default=721)
    for name in ("eg", "derivs"):
        p = add(name, _COMMANDS[name])
        lo, hi, n = grid_defaults[name]
        p.add_argument("--lo", type=float, default=lo, help="grid start, units of 2*pi")
        p.add_argument("--hi", type=float, default=hi, help="grid end, units of 2*pi")
        p.add_argument("--n-grid", type=int, default=n)
    p = add("couplings", _cmd_couplings)
    p.add_argument("--labels", default=None, help="comma-separated label strings")
    p.add_argument("--pc-basis", action="store_true",
                   help="add persistent-current-basis label names (x and z swap)")
    add("spectrum", _cmd_spectrum)
    add("scan", _cmd_scan)
    p = add("truncation", _cmd_truncation)
    p.add_argument("--epsilon", type=float, action="append", default=None,
                   help="error target; repeatable (default 1e-3)")
    add("validate", _cmd_validate)
    return parser


def _resolve_parallel(cfg: SystemConfig, args) -> SystemConfig:
    # precedence: --parallel flag, then COUPLER_LAB_THREADS, then config
    parallel = cfg.numerics["parallel"]
    env = os.environ.get("COUPLER_LAB_THREADS")
    if env is not None:
        try:
            parallel = int(env)
        except ValueError as exc:
            raise ConfigurationError(f"bad COUPLER_LAB_THREADS value {env!r}") from exc
    if getattr(args, "parallel", None) is not None:
        parallel = args.parallel
    if parallel < 1:
        raise ConfigurationError(f"parallelism must be >= 1, got {parallel}")
    numerics = dict(cfg.numerics, parallel=parallel)
    if getattr(args, "nu_max", None) is not None:
        if args.nu_max < 1:
            raise ConfigurationError(f"nu_max must be >= 1, got {args.nu_max}")
        numerics["nu_max"] = args.nu_max
    if getattr(args, "dims", None) is not None:
        numerics["dims"] = _parse_int_list(args.dims)
    return SystemConfig(
        system=cfg.system,
        numerics=numerics,
        units=cfg.units,
        sweep=cfg.sweep,
        scan=cfg.scan,
        source=cfg.source,
    )


def _emit_error(exc: Exception, code: int):
    payload = {"error": type(exc).__name__, "message": str(exc), "exit_code": code}
    details = getattr(exc, "details", None)
    if details:
        payload["details"] = details
    print(json.dumps(payload, sort_keys=True, default=str), file=sys.stderr)


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        cfg = _resolve_parallel(cfg, args)
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        return _COMMANDS[args.command](cfg, args, out)
    except (ConfigurationError, ValueError) as exc:
        _emit_error(exc, EXIT_CONFIG)
        return EXIT_CONFIG
    except (NumericError, ResourceError) as exc:
        _emit_error(exc, EXIT_NUMERIC)
        return EXIT_NUMERIC


def run(command: str, config, out=".", **options) -> int:
    """Programmatic entry point mirroring the command line.

    options become --key value flags (underscores map to dashes);
    boolean True adds a bare flag.  Returns the exit status.
    """
    argv = [command, "--config", str(config), "--out", str(out)]
    for key, value in options.items():
        flag = "--" + key.replace("_", "-")
        if value is True:
            argv.append(flag)
        elif value is not None:
            argv.extend([flag, str(value)])
    return main(argv)


if __name__ == "__main__":
    sys.exit(main())
