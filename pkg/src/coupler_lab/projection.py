"""Qubit-subspace reduction of the coupler-mediated interaction.

Each qubit is diagonalized in its own Fock basis and truncated to its
two lowest eigenstates.  The interaction E_g(phi_cx - sum_j alpha_j
phi_j) then reduces, term by Fourier term, to products of single-qubit
Pauli coefficients

    e^{-is phi_j} -> c_I(s) I + c_x(s) sx + c_y(s) sy + c_z(s) sz,

giving the coupling table g_labels = E_Ltc sum_nu B_nu e^{i nu phi_cx}
prod_j c_{label_j}(nu alpha_j).  The linear theory instead expands E_g
to second order in the total qubit flux and projects the resulting
one- and two-local flux operators.

Two cheaper routes to g_xx for identical unbiased qubits are included:
a Gaussian closed form over the reference state (|0> + |1>)/sqrt(2)
and a direct two-flux quadrature of the second-order finite difference
of E_g, plus the closed-form bound on the linear theory's error.

Conventions: sz = |0><0| - |1><1| in the energy eigenbasis; eigenvector
phases are fixed so phi_p = <0|phi|1> >= 0; zeta_eff is the central
variance of the reference state (it equals zeta_j in the harmonic
limit).
"""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .coupler import EgSeries
from .errors import ConfigurationError, NumericError
from .kapteyn import FourierSeries
from .oscillator import NormalModeSystem, assemble_tensor_operator

__all__ = [
    "CouplingTable",
    "QubitParams",
    "QubitSubspace",
    "ResonanceWarning",
    "couplings",
    "gxx_gaussian",
    "gxx_quadrature",
    "linear_couplings",
    "linear_error_bound",
    "pauli_exp_coeffs",
    "qubit_subspace",
    "resonance_check",
]

PAULI_LABELS = "Ixyz"


class ResonanceWarning(UserWarning):
    """A multi-qubit resonance threatens the two-level reduction."""


@dataclass(frozen=True)
class QubitParams:
    """Flux-qubit parameters; e_lj is E_Lj in the global energy unit."""

    beta_j: float
    zeta_j: float
    e_lj: float = 1.0
    phi_jx: float = 0.0
    alpha_j: float = 0.0

    def __post_init__(self):
        if self.beta_j < 0.0:
            raise ConfigurationError(f"beta_j must be nonnegative, got {self.beta_j}")
        if self.zeta_j <= 0.0:
            raise ConfigurationError(f"zeta_j must be positive, got {self.zeta_j}")
        if self.e_lj <= 0.0:
            raise ConfigurationError(f"e_lj must be positive, got {self.e_lj}")


@dataclass(frozen=True)
class QubitSubspace:
    """Two-level reduction of a single qubit.

    energies holds the lowest few levels in the global unit (at least
    E_0 <= E_1); vectors is the (n_basis, 2) eigenvector block in the
    Fock basis; flux is the full flux operator phi_jx + sqrt(zeta)
    (a + a^dag).  flux_eigs/flux_modes cache its eigendecomposition
    with the qubit vectors already rotated in, so exponentials of the
    flux operator are a diagonal phase away.
    """

    params: QubitParams
    energies: np.ndarray
    vectors: np.ndarray
    flux: np.ndarray
    phi_p: float
    zeta_eff: float
    weak_isolation: bool
    flux_eigs: np.ndarray = field(repr=False)
    flux_modes: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.energies[1] < self.energies[0]:
            raise ConfigurationError("subspace energies out of order")
        if self.phi_p < 0.0:
            raise ConfigurationError("phi_p must be nonnegative by convention")

    @property
    def splitting(self) -> float:
        return float(self.energies[1] - self.energies[0])


def qubit_subspace(params: QubitParams, n_basis: int = 60) -> QubitSubspace:
    """Diagonalize one qubit and reduce it to its two lowest states.

    The Fock ladder of the quadratic part (frequency 2 zeta_j E_Lj)
    carries the junction term exactly as in the coupler problem; the
    double-well regime beta_j > 1 is allowed.  weak_isolation flags
    E_2 - E_1 < 3 (E_1 - E_0).
    """
    if n_basis < 40:
        raise ConfigurationError(f"n_basis must be >= 40, got {n_basis}")
    zeta = params.zeta_j
    nm = NormalModeSystem(
        freqs=[2.0 * zeta],
        displacements=[[math.sqrt(zeta)]],
        amplitudes=[0.5 * params.beta_j * np.exp(1j * params.phi_jx)],
        dims=(n_basis,),
    )
    h = assemble_tensor_operator(nm).to_dense()
    vals, vecs = np.linalg.eigh(h)

    ladder = np.sqrt(np.arange(1, n_basis))
    flux = math.sqrt(zeta) * (np.diag(ladder, 1) + np.diag(ladder, -1))
    flux = flux + params.phi_jx * np.eye(n_basis)

    v0 = vecs[:, 0].astype(complex)
    v1 = vecs[:, 1].astype(complex)
    # deterministic phases: largest |0> component positive, then phi_p >= 0
    lead = np.argmax(np.abs(v0))
    v0 *= np.exp(-1j * np.angle(v0[lead]))
    raw = v0.conj() @ (flux @ v1)
    if abs(raw) > 1e-14:
        v1 *= np.exp(-1j * np.angle(raw))
    else:
        lead = np.argmax(np.abs(v1))
        v1 *= np.exp(-1j * np.angle(v1[lead]))
    phi_p = float((v0.conj() @ (flux @ v1)).real)

    psi_r = (v0 + v1) / math.sqrt(2.0)
    mean = float((psi_r.conj() @ (flux @ psi_r)).real)
    second = float((psi_r.conj() @ (flux @ (flux @ psi_r))).real)
    zeta_eff = second - mean**2

    weak = bool(vals[2] - vals[1] < 3.0 * (vals[1] - vals[0]))

    lam, modes = np.linalg.eigh(flux)
    pair = np.stack([v0, v1], axis=1)
    w = modes.conj().T @ pair  # qubit vectors in the flux eigenbasis
    return QubitSubspace(
        params=params,
        energies=params.e_lj * vals[: min(4, n_basis)],
        vectors=pair,
        flux=flux,
        phi_p=phi_p,
        zeta_eff=zeta_eff,
        weak_isolation=weak,
        flux_eigs=lam,
        flux_modes=w,
    )


def _exp_blocks(sub: QubitSubspace, s) -> np.ndarray:
    """2x2 blocks of e^{-is phi} for an array of s values, shape (ns,2,2)."""
    s = np.atleast_1d(np.asarray(s, dtype=float))
    phase = np.exp(-1j * np.outer(s, sub.flux_eigs))  # (ns, n)
    w = sub.flux_modes  # (n, 2)
    return np.einsum("ka,sk,kb->sab", w.conj(), phase, w)


def _pauli_decompose(m: np.ndarray):
    """Coefficients (c_I, c_x, c_y, c_z) of a 2x2 matrix in the Pauli basis."""
    c_i = (m[..., 0, 0] + m[..., 1, 1]) / 2.0
    c_z = (m[..., 0, 0] - m[..., 1, 1]) / 2.0
    c_x = (m[..., 0, 1] + m[..., 1, 0]) / 2.0
    c_y = 1j * (m[..., 0, 1] - m[..., 1, 0]) / 2.0
    return c_i, c_x, c_y, c_z


def pauli_exp_coeffs(sub: QubitSubspace, s: float) -> tuple:
    """(c_I, c_x, c_y, c_z) of e^{-is phi} in the {|0>, |1>} basis."""
    m = _exp_blocks(sub, s)[0]
    c_i, c_x, c_y, c_z = _pauli_decompose(m)
    return complex(c_i), complex(c_x), complex(c_y), complex(c_z)


@dataclass(frozen=True)
class CouplingTable:
    """Pauli-label coupling coefficients in the global energy unit."""

    entries: dict
    metadata: dict = field(default_factory=dict)

    def __getitem__(self, label: str) -> float:
        return self.entries[label]

    @property
    def labels(self):
        return tuple(self.entries)

    def nonzero(self, cutoff: float = 0.0) -> dict:
        return {k: v for k, v in self.entries.items() if abs(v) > cutoff}


def _expand_labels(labels, n_qubits: int):
    if labels == "all":
        return ["".join(p) for p in itertools.product(PAULI_LABELS, repeat=n_qubits)]
    out = []
    for label in labels:
        if len(label) != n_qubits or any(ch not in PAULI_LABELS for ch in label):
            raise ConfigurationError(f"bad Pauli label {label!r} for {n_qubits} qubits")
        out.append(label)
    return out


def resonance_check(subs, window: float = 0.02):
    """Detect E_2-E_0 of one qubit near a sum of two other splittings.

    Such accidental degeneracies undermine the independent two-level
    reductions; they are reported, not corrected.
    """
    hits = []
    e10 = [s.splitting for s in subs]
    e20 = [float(s.energies[2] - s.energies[0]) if len(s.energies) > 2 else None
           for s in subs]
    for i, gap in enumerate(e20):
        if gap is None:
            continue
        others = [j for j in range(len(subs)) if j != i]
        for j, k in itertools.combinations_with_replacement(others, 2):
            target = e10[j] + e10[k]
            if abs(gap - target) <= window * gap:
                hits.append({"qubit": i, "pair": (j, k), "e20": gap, "sum": target})
    return hits


def couplings(series: EgSeries, subs, alphas, phi_cx: float, labels="all",
              e_ltc: float = 1.0) -> CouplingTable:
    """Full nonlinear coupling table from the interaction series.

    g_labels = e_ltc sum_nu B_nu e^{i nu phi_cx} prod_j c_{label_j}(nu
    alpha_j), summed over nu in [-nu_max, nu_max].  The negative-nu
    blocks are computed independently rather than by conjugate
    symmetry, so the imaginary residue is a real consistency check; it
    must stay below 1e-10 (in units of e_ltc).
    """
    if len(subs) != len(alphas) or not subs:
        raise ConfigurationError("need one alpha per qubit subspace")
    label_list = _expand_labels(labels, len(subs))
    nu_max = series.nu_max
    nus = np.arange(-nu_max, nu_max + 1)
    b_signed = series.coeffs[np.abs(nus)]
    phases = np.exp(1j * nus * phi_cx)

    coeff_tables = []
    for sub, alpha in zip(subs, alphas):
        blocks = _exp_blocks(sub, nus * alpha)
        c_i, c_x, c_y, c_z = _pauli_decompose(blocks)
        coeff_tables.append({"I": c_i, "x": c_x, "y": c_y, "z": c_z})

    entries = {}
    worst = 0.0
    for label in label_list:
        prod = b_signed * phases
        for j, ch in enumerate(label):
            prod = prod * coeff_tables[j][ch]
        total = complex(np.sum(prod))
        worst = max(worst, abs(total.imag))
        entries[label] = e_ltc * total.real
    if worst > 1e-10:
        raise NumericError(
            "coupling table lost Hermiticity", {"imag_residue": worst}
        )

    resonances = resonance_check(subs)
    if resonances:
        warnings.warn(
            f"{len(resonances)} multi-qubit resonance(s) detected", ResonanceWarning
        )
    meta = {
        "theory": "NA",
        "nu_max": nu_max,
        "phi_cx": phi_cx,
        "imag_residue": worst,
        "resonances": resonances,
    }
    return CouplingTable(entries=entries, metadata=meta)


def linear_couplings(derivs, subs, alphas, phi_cx: float, e_ltc: float = 1.0,
                     theory: str = "LA") -> CouplingTable:
    """Coupling table of the linearized interaction.

    Expanding E_g about phi_cx gives -E_g' sum_j alpha_j phi_j plus
    (E_g''/2)(sum_j alpha_j phi_j)^2.  Same-qubit squares use the exact
    truncated phi^2 block (leakage through the full Fock space), not
    the square of the projected 2x2 flux.
    """
    if len(subs) != len(alphas) or not subs:
        raise ConfigurationError("need one alpha per qubit subspace")
    d1, d2 = derivs
    k = len(subs)

    flux_parts = []
    flux2_parts = []
    worst = 0.0
    for sub in subs:
        block = sub.vectors.conj().T @ (sub.flux @ sub.vectors)
        block2 = sub.vectors.conj().T @ (sub.flux @ (sub.flux @ sub.vectors))
        parts = _pauli_decompose(block)
        parts2 = _pauli_decompose(block2)
        worst = max(worst, *(abs(np.imag(c)) for c in parts + parts2))
        flux_parts.append(dict(zip(PAULI_LABELS, (np.real(c) for c in parts))))
        flux2_parts.append(dict(zip(PAULI_LABELS, (np.real(c) for c in parts2))))
    if worst > 1e-10:
        raise NumericError(
            "flux blocks lost Hermiticity", {"imag_residue": worst}
        )

    entries = {"".join(p): 0.0 for p in itertools.product(PAULI_LABELS, repeat=k)}

    def add(j, parts_j, weight):
        # one-qubit operator on j, identity elsewhere
        for eta, cval in parts_j.items():
            label = "".join(eta if m == j else "I" for m in range(k))
            entries[label] += weight * cval

    for j in range(k):
        add(j, flux_parts[j], -d1 * alphas[j])
        add(j, flux2_parts[j], 0.5 * d2 * alphas[j] ** 2)
    for j in range(k):
        for l in range(j + 1, k):
            weight = d2 * alphas[j] * alphas[l]
            for eta_j, c_j in flux_parts[j].items():
                for eta_l, c_l in flux_parts[l].items():
                    label = "".join(
                        eta_j if m == j else (eta_l if m == l else "I")
                        for m in range(k)
                    )
                    entries[label] += weight * c_j * c_l

    entries = {lbl: e_ltc * v for lbl, v in entries.items()}
    meta = {"theory": theory, "phi_cx": phi_cx, "imag_residue": worst}
    return CouplingTable(entries=entries, metadata=meta)


def gxx_gaussian(series: EgSeries, phi_p: float, zeta_eff: float, alpha: float,
                 phi_cx: float, e_ltc: float = 1.0) -> float:
    """Gaussian-reference closed form for g_xx of identical unbiased qubits.

    g_xx = -e_ltc sum_nu B_nu e^{i nu phi_cx} sin^2(nu alpha phi_p)
    e^{-alpha^2 nu^2 zeta_eff}; the nu = 0 term vanishes.
    """
    nu = np.arange(1, series.nu_max + 1)
    b = series.coeffs[1:]
    total = np.sum(
        2.0 * b * np.cos(nu * phi_cx) * np.sin(nu * alpha * phi_p) ** 2
        * np.exp(-(alpha * nu) ** 2 * zeta_eff)
    )
    return float(-e_ltc * total)


def _position_wavefunction(vec: np.ndarray, zeta: float, grid: np.ndarray) -> np.ndarray:
    """Evaluate a Fock-space vector on a flux grid.

    Uses the normalized-Hermite recurrence; stable for the basis sizes
    in play (the n-th function peaks well inside +-8 sqrt(zeta_eff)).
    """
    x = grid / math.sqrt(2.0 * zeta)
    n = len(vec)
    h_prev = np.pi**-0.25 * np.exp(-0.5 * x**2)
    out = vec[0] * h_prev
    h_curr = math.sqrt(2.0) * x * h_prev
    if n > 1:
        out = out + vec[1] * h_curr
    for m in range(2, n):
        h_next = math.sqrt(2.0 / m) * x * h_curr - math.sqrt((m - 1) / m) * h_prev
        out = out + vec[m] * h_next
        h_prev, h_curr = h_curr, h_next
    return out / (2.0 * zeta) ** 0.25


def _gxx_quad_once(eg_callable, sub: QubitSubspace, alpha: float, phi_cx: float,
                   n_grid: int) -> float:
    zeta = sub.params.zeta_j
    phi_p = sub.phi_p
    half = 8.0 * math.sqrt(max(sub.zeta_eff, zeta))
    grid = np.linspace(-half, half, n_grid)
    step = grid[1] - grid[0]
    ref = np.real(sub.vectors[:, 0] + sub.vectors[:, 1]) / math.sqrt(2.0)
    psi_r = _position_wavefunction(ref, zeta, grid + phi_p)
    w = psi_r**2 * step
    w[0] *= 0.5
    w[-1] *= 0.5
    w /= np.sum(w)
    # pair weights of u1 + u2 and u1 - u2 on the equispaced Minkowski grids
    w_sum = np.convolve(w, w)
    w_diff = np.convolve(w, w[::-1])
    t = np.linspace(2 * grid[0], 2 * grid[-1], 2 * n_grid - 1)
    t_diff = t - grid[0] - grid[-1]
    shift = 2.0 * alpha * phi_p
    val = (
        np.sum(w_sum * (eg_callable(phi_cx - alpha * t - shift)
                        + eg_callable(phi_cx + alpha * t + shift)))
        - 2.0 * np.sum(w_diff * eg_callable(phi_cx - alpha * t_diff))
    )
    return float(val / 4.0)


def gxx_quadrature(eg_callable, subs, alpha: float, phi_cx: float,
                   n_grid: int = 512, tol: float = 1e-8) -> float:
    """g_xx as the reference-state average of finite differences of E_g.

    Expanding <00|E_g(phi_cx - alpha(phi_1 + phi_2))|11> through the
    parity decomposition of the qubit states gives four terms over the
    centered reference density rho(u) = psi_r^2(u):

        4 g_xx = <E_g(phi_cx - alpha(u1+u2) - 2 alpha phi_p)>
               + <E_g(phi_cx + alpha(u1+u2) + 2 alpha phi_p)>
               - 2 <E_g(phi_cx - alpha(u1-u2))>.

    For a symmetric rho this collapses to the single 3-point second
    difference of E_g; the asymmetry of the true density is kept here,
    which is what makes the average agree with the full projection
    machinery to quadrature accuracy.  The grid spans +-8
    sqrt(zeta_eff) per axis and is doubled once as a convergence
    check.
    """
    sub = subs[0] if not isinstance(subs, QubitSubspace) else subs
    coarse = _gxx_quad_once(eg_callable, sub, alpha, phi_cx, n_grid)
    fine = _gxx_quad_once(eg_callable, sub, alpha, phi_cx, 2 * n_grid)
    if abs(fine - coarse) > tol:
        raise NumericError(
            "finite-difference quadrature did not converge",
            {"coarse": coarse, "fine": fine, "n_grid": n_grid},
        )
    return fine


def linear_error_bound(beta_c: float, zeta_eff: float, phi_p: float, alpha: float,
                       e_ltc: float = 1.0) -> float:
    """Worst-case |g_xx - g_xx_lin| from the quartic remainder of E_g.

    e_ltc beta_c (alpha/(1-beta_c))^4 phi_p^2 (2 zeta_eff + phi_p^2/3),
    using the closed-form maximum of the classical fourth derivative.
    """
    if not 0.0 <= beta_c < 1.0:
        raise ValueError(f"linear_error_bound requires 0 <= beta_c < 1, got {beta_c}")
    return (
        e_ltc * beta_c * (alpha / (1.0 - beta_c)) ** 4
        * phi_p**2 * (2.0 * zeta_eff + phi_p**2 / 3.0)
    )
