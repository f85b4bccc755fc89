"""Validation harness: exact spectra versus the reduced theories.

exact_spectrum diagonalizes the full coupler-plus-qubits circuit in
the normal-mode Fock basis; bo_spectrum eliminates the coupler through
its ground energy, either as the full Fourier series ("NA") or as the
quadratic expansion with analytic ("LA") or numerically exact ("LN")
derivatives.  sweep and coupling_scan drive parameter studies over
those routes with per-point failure capture.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .coupler import (
    CouplerParams,
    b_coeffs,
    eg_derivs_analytic,
    eg_derivs_numeric,
    eg_exact,
    u_min,
    u_zpe_harmonic,
)
from .errors import ConfigurationError
from .oscillator import (
    DEFAULT_MEMORY_BUDGET,
    Spectrum,
    TensorOperator,
    assemble_tensor_operator,
    ho_exp_matrix,
    lowest_eigs,
    normal_modes,
)
from .projection import QubitParams, couplings, qubit_subspace

__all__ = [
    "CouplerSystem",
    "ScanResult",
    "SweepResult",
    "SweepSpec",
    "bo_spectrum",
    "coupling_scan",
    "exact_spectrum",
    "sweep",
]

SWEEP_AXES = ("beta_j", "phi_cx", "zeta_c", "alpha", "beta_c")
THEORIES = ("exact", "NA", "LA", "LN")


@dataclass(frozen=True)
class CouplerSystem:
    """One coupler with its attached qubits, in qubit energy units.

    e_ltc is the coupler inductive energy over the (first) qubit's,
    so couplings and spectra come out in the same global unit as the
    qubit parameters.  beta_c < 1 keeps the coupler monostable.
    """

    beta_c: float
    zeta_c: float
    qubits: tuple
    e_ltc: float = 1.0
    phi_cx: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.beta_c < 1.0:
            raise ConfigurationError(
                f"beta_c must lie in [0, 1) for a monostable coupler, got {self.beta_c}"
            )
        if self.zeta_c <= 0.0:
            raise ConfigurationError(f"zeta_c must be positive, got {self.zeta_c}")
        if self.e_ltc <= 0.0:
            raise ConfigurationError(f"e_ltc must be positive, got {self.e_ltc}")
        object.__setattr__(self, "qubits", tuple(self.qubits))
        if not self.qubits:
            raise ConfigurationError("at least one qubit is required")


def exact_spectrum(system, dims=None, n_levels: int = 6,
                   memory_budget: int = DEFAULT_MEMORY_BUDGET) -> Spectrum:
    """Lowest levels of the full coupled circuit.

    dims index the normal modes in ascending frequency; at reference
    parameters the qubit-like modes come first, so the default keeps
    40 states per qubit mode and 18 on the coupler-like mode.
    """
    qubits = tuple(system.qubits)
    if not 2 <= len(qubits) <= 3:
        raise ConfigurationError(
            f"exact spectrum supports 2 or 3 qubits plus the coupler, got {len(qubits)}"
        )
    if dims is None:
        dims = (40,) * len(qubits) + (18,)
    dims = tuple(int(d) for d in dims)
    nm = normal_modes(system, dims)
    op = assemble_tensor_operator(nm, memory_budget=memory_budget)
    spec = lowest_eigs(op, n_levels, memory_budget=memory_budget)
    spec.metadata.update(theory="exact", dims=dims)
    return spec


def _flux_matrix(zeta: float, dim: int) -> np.ndarray:
    n = np.sqrt(np.arange(1, dim))
    return math.sqrt(zeta) * (np.diag(n, 1) + np.diag(n, -1)).astype(complex)


def _one_qubit_factors(dims, j, matrix):
    factors = [np.eye(d, dtype=complex) for d in dims]
    factors[j] = matrix
    return factors


def bo_spectrum(theory: str, system, dims=None, n_levels: int = 6,
                nu_max: int = 100, mu_max: int = 40, series=None,
                n_basis: int = 50,
                memory_budget: int = DEFAULT_MEMORY_BUDGET) -> Spectrum:
    """Lowest levels of the coupler-eliminated qubit Hamiltonian.

    "NA" carries the ground-energy Fourier series as products of
    per-qubit exponential factors, exact at the basis truncation.
    "LA"/"LN" keep the quadratic expansion about the bias point with
    analytic respectively numeric derivatives; non-finite derivative
    inputs yield an all-NaN spectrum flagged in metadata rather than
    an exception, so sweeps can display breakdown regions.
    """
    if theory not in ("NA", "LA", "LN"):
        raise ConfigurationError(f"unknown reduced theory {theory!r}")
    qubits = tuple(system.qubits)
    if dims is None:
        dims = (40,) * len(qubits)
    dims = tuple(int(d) for d in dims)
    if len(dims) != len(qubits):
        raise ConfigurationError("need one basis dimension per qubit")
    e_ltc = float(system.e_ltc)
    phi_eff = system.phi_cx - sum(q.alpha_j * q.phi_jx for q in qubits)

    diag = np.zeros(dims)
    terms = []
    for j, q in enumerate(qubits):
        shape = [1] * len(dims)
        shape[j] = dims[j]
        ladder = 2.0 * q.zeta_j * q.e_lj * (np.arange(dims[j]) + 0.5)
        diag = diag + ladder.reshape(shape)
        junction = ho_exp_matrix(math.sqrt(q.zeta_j), dims[j])
        coeff = 0.5 * q.beta_j * q.e_lj * np.exp(1j * q.phi_jx)
        terms.append((coeff, _one_qubit_factors(dims, j, junction)))

    if theory == "NA":
        if series is None:
            series = b_coeffs(system.beta_c, system.zeta_c, nu_max, mu_max)
        coeffs = series.coeffs
        diag = diag + e_ltc * coeffs[0]
        for nu in range(1, series.nu_max + 1):
            factors = [
                ho_exp_matrix(-nu * q.alpha_j * math.sqrt(q.zeta_j), d)
                for q, d in zip(qubits, dims)
            ]
            terms.append((e_ltc * coeffs[nu] * np.exp(1j * nu * phi_eff), factors))
        meta = {"nu_max": series.nu_max, "mu_max": series.mu_max}
    else:
        if theory == "LA":
            d1, d2 = eg_derivs_analytic(system.beta_c, system.zeta_c, phi_eff)
            const = u_min(system.beta_c, phi_eff) + u_zpe_harmonic(
                system.beta_c, system.zeta_c, phi_eff
            )
        else:
            cp = CouplerParams(beta_c=system.beta_c, zeta_c=system.zeta_c)
            d1, d2 = eg_derivs_numeric(cp, phi_eff, n_basis=n_basis)
            const = float(eg_exact(cp, phi_eff, n_basis=n_basis)[0])
        if not all(map(math.isfinite, (d1, d2, const))):
            return Spectrum(
                np.full(n_levels, np.nan),
                metadata={"theory": theory, "non_finite": True, "dims": dims},
            )
        diag = diag + e_ltc * float(const)
        xs = [_flux_matrix(q.zeta_j, d) for q, d in zip(qubits, dims)]
        for j, q in enumerate(qubits):
            terms.append(
                (-0.5 * e_ltc * d1 * q.alpha_j, _one_qubit_factors(dims, j, xs[j]))
            )
            terms.append(
                (0.25 * e_ltc * d2 * q.alpha_j**2,
                 _one_qubit_factors(dims, j, xs[j] @ xs[j]))
            )
        for j in range(len(qubits)):
            for l in range(j + 1, len(qubits)):
                factors = _one_qubit_factors(dims, j, xs[j])
                factors[l] = xs[l]
                weight = 0.5 * e_ltc * d2 * qubits[j].alpha_j * qubits[l].alpha_j
                terms.append((weight, factors))
        meta = {"d1": float(d1), "d2": float(d2)}

    op = TensorOperator(dims, diag, terms)
    spec = lowest_eigs(op, n_levels, memory_budget=memory_budget)
    spec.metadata.update(theory=theory, dims=dims, **meta)
    return spec


@dataclass(frozen=True)
class SweepSpec:
    """One-axis parameter sweep over the chosen theories.

    axis "beta_j" and "alpha" apply the point value to every qubit;
    the coupler axes replace the corresponding system field.  dims
    configure the exact solve, bo_dims the reduced ones.
    """

    axis: str
    range: tuple
    system: CouplerSystem
    theories: tuple = THEORIES
    n_levels: int = 4
    dims: tuple = None
    bo_dims: tuple = None
    nu_max: int = 100
    mu_max: int = 40
    parallel: int = 1

    def __post_init__(self):
        if self.axis not in SWEEP_AXES:
            raise ConfigurationError(
                f"axis must be one of {SWEEP_AXES}, got {self.axis!r}"
            )
        lo, hi, n = self.range
        if not lo < hi:
            raise ConfigurationError(f"range needs lo < hi, got ({lo}, {hi})")
        if int(n) < 2:
            raise ConfigurationError(f"n_points must be >= 2, got {n}")
        object.__setattr__(self, "range", (float(lo), float(hi), int(n)))
        if self.n_levels < 2:
            raise ConfigurationError(f"n_levels must be >= 2, got {self.n_levels}")
        bad = set(self.theories) - set(THEORIES)
        if bad:
            raise ConfigurationError(f"unknown theories {sorted(bad)}")
        object.__setattr__(self, "theories", tuple(self.theories))

    @property
    def values(self) -> np.ndarray:
        lo, hi, n = self.range
        return np.linspace(lo, hi, n)


@dataclass(frozen=True)
class SweepResult:
    """Per-point records in axis order; failures recorded, not raised."""

    spec: SweepSpec
    points: tuple
    metadata: dict = field(default_factory=dict)

    @property
    def values(self) -> np.ndarray:
        return np.asarray([rec["value"] for rec in self.points])

    def excitation_array(self, theory: str) -> np.ndarray:
        """(n_points, n_levels - 1) excitations; NaN rows where failed."""
        width = self.spec.n_levels - 1
        rows = []
        for rec in self.points:
            exc = rec["excitations"].get(theory)
            rows.append(exc if exc is not None else (np.nan,) * width)
        return np.asarray(rows, dtype=float)


def _point_system(system: CouplerSystem, axis: str, value: float) -> CouplerSystem:
    if axis in ("beta_c", "zeta_c", "phi_cx"):
        return replace(system, **{axis: value})
    fld = {"beta_j": "beta_j", "alpha": "alpha_j"}[axis]
    qubits = tuple(replace(q, **{fld: value}) for q in system.qubits)
    return replace(system, qubits=qubits)


def _sweep_point(spec: SweepSpec, series, value: float) -> dict:
    record = {
        "value": float(value),
        "energies": {},
        "excitations": {},
        "errors": {},
        "meta": {},
    }
    try:
        point_system = _point_system(spec.system, spec.axis, value)
    except Exception as exc:
        record["errors"]["system"] = f"{type(exc).__name__}: {exc}"
        return record
    for theory in spec.theories:
        try:
            if theory == "exact":
                s = exact_spectrum(point_system, spec.dims, spec.n_levels)
            else:
                s = bo_spectrum(
                    theory,
                    point_system,
                    spec.bo_dims,
                    spec.n_levels,
                    nu_max=spec.nu_max,
                    mu_max=spec.mu_max,
                    series=series if theory == "NA" else None,
                )
            record["energies"][theory] = tuple(float(v) for v in s.eigenvalues)
            record["excitations"][theory] = tuple(float(v) for v in s.excitations)
            keep = ("mode", "iterations", "non_finite")
            record["meta"][theory] = {
                key: s.metadata[key] for key in keep if key in s.metadata
            }
        except Exception as exc:
            record["errors"][theory] = f"{type(exc).__name__}: {exc}"
    return record


def sweep(spec: SweepSpec) -> SweepResult:
    """Run the sweep; points are independent and may run concurrently.

    Output order follows the axis grid regardless of completion
    order.  The interaction series is shared across points whenever
    the axis leaves the coupler parameters untouched.
    """
    series = None
    if "NA" in spec.theories and spec.axis not in ("beta_c", "zeta_c"):
        series = b_coeffs(
            spec.system.beta_c, spec.system.zeta_c, spec.nu_max, spec.mu_max
        )
    values = spec.values
    if spec.parallel > 1:
        with ThreadPoolExecutor(max_workers=spec.parallel) as pool:
            points = list(pool.map(lambda v: _sweep_point(spec, series, v), values))
    else:
        points = [_sweep_point(spec, series, v) for v in values]
    failed = sum(1 for rec in points if rec["errors"])
    meta = {"axis": spec.axis, "n_points": len(points), "n_failed": failed}
    return SweepResult(spec=spec, points=tuple(points), metadata=meta)


@dataclass(frozen=True)
class ScanResult:
    """Coupling tables over a coupler-bias grid."""

    phi_cx: np.ndarray
    tables: tuple
    metadata: dict = field(default_factory=dict)

    @property
    def labels(self):
        return self.tables[0].labels if self.tables else ()

    def label_array(self, label: str) -> np.ndarray:
        return np.asarray([t[label] for t in self.tables], dtype=float)


def coupling_scan(system, labels, phi_cx_range, nu_max: int = 100,
                  mu_max: int = 40, n_basis: int = 60) -> ScanResult:
    """Coupling coefficients for each bias point on a linear grid.

    Qubit subspaces and the interaction series are built once; only
    the bias phases change per point.
    """
    lo, hi, n = phi_cx_range
    if not lo < hi:
        raise ConfigurationError(f"phi_cx range needs lo < hi, got ({lo}, {hi})")
    if int(n) < 2:
        raise ConfigurationError(f"phi_cx grid needs >= 2 points, got {n}")
    series = b_coeffs(system.beta_c, system.zeta_c, nu_max, mu_max)
    subs = [qubit_subspace(q, n_basis=n_basis) for q in system.qubits]
    alphas = [q.alpha_j for q in system.qubits]
    grid = np.linspace(float(lo), float(hi), int(n))
    tables = tuple(
        couplings(series, subs, alphas, float(phi), labels=labels,
                  e_ltc=system.e_ltc)
        for phi in grid
    )
    meta = {
        "beta_c": system.beta_c,
        "zeta_c": system.zeta_c,
        "e_ltc": system.e_ltc,
        "nu_max": nu_max,
        "mu_max": mu_max,
    }
    return ScanResult(phi_cx=grid, tables=tables, metadata=meta)
