"""Coupler ground-state-energy engine.

The coupler is a biased oscillator with a junction,

    H_c / E_Ltc = (phi_c - phi_x)^2 / 2 + 4 zeta^2 n^2 + beta cos(phi_c),

whose ground energy as a function of the bias phi_x mediates every
qubit-qubit interaction.  Three descriptions of E_g(phi_x) live here:

  * exact: dense diagonalization in the Fock basis of the beta = 0
    problem (the oracle),
  * series: E_g/E_Ltc = B_0 + 2 sum_{nu>0} B_nu cos(nu phi_x), with a
    classical part B_nu^(0) from the potential minimum and a quantum
    part B_nu^(1) from the harmonic zero-point energy,

        B_0     = -beta^2/4            + zeta (G_0 - beta G_1)
        B_nu    = J_nu(beta nu)/nu^2   + (zeta/nu) sum_mu mu G_mu J_{nu-mu}(beta nu)

  * derivatives: E_g' and E_g'' at a bias point, in closed form from
    the Kepler-equation minimum (analytic) or from perturbation theory
    on the exact eigensystem (numeric).

Truncating the series at nu_max incurs an error bounded through the
closed-form tail sums

    2 sum_{nu>0} B_nu^(0) = beta + beta^2/4
    2 sum_{nu>0} B_nu^(1) = sqrt(1-beta) - G_0 + beta G_1,

combined with the same relative signs they carry in E_g.  All outputs
are in units of E_Ltc.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, NumericError
from .kapteyn import FourierSeries, bessel_j, cos_beta, g_coeff, kepler_solve
from .oscillator import NormalModeSystem, assemble_tensor_operator, lowest_eigs

__all__ = [
    "BodcMetrics",
    "CouplerParams",
    "EgSeries",
    "b_coeffs",
    "bodc_metrics",
    "eg_derivs_analytic",
    "eg_derivs_numeric",
    "eg_eval",
    "eg_exact",
    "min_nu_for_error",
    "truncation_bound",
    "u_min",
    "u_zpe_harmonic",
]

MIN_NU_CAP = 100_000


@dataclass(frozen=True)
class CouplerParams:
    """Dimensionless coupler parameters; energies in the global unit."""

    beta_c: float
    zeta_c: float
    e_ltc: float = 1.0
    phi_cx: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.beta_c < 1.0:
            raise ConfigurationError(
                f"beta_c must be in [0, 1) for a monostable coupler, got {self.beta_c}"
            )
        if self.zeta_c <= 0.0:
            raise ConfigurationError(f"zeta_c must be positive, got {self.zeta_c}")
        if self.e_ltc <= 0.0:
            raise ConfigurationError(f"e_ltc must be positive, got {self.e_ltc}")


@dataclass(frozen=True)
class EgSeries:
    """Fourier representation of E_g(phi_x)/E_Ltc.

    b_classical holds B_nu^(0), b_quantum holds B_nu^(1); the total
    coefficient is B_nu = B_nu^(0) + zeta_c B_nu^(1).  Both components
    are even series (B_nu = B_{-nu}).
    """

    b_classical: FourierSeries
    b_quantum: FourierSeries
    zeta_c: float
    nu_max: int
    mu_max: int

    def __post_init__(self):
        if self.b_classical.parity != "even" or self.b_quantum.parity != "even":
            raise ConfigurationError("EgSeries components must be even series")
        if self.b_classical.nu_max != self.nu_max or self.b_quantum.nu_max != self.nu_max:
            raise ConfigurationError("component series length disagrees with nu_max")

    @property
    def coeffs(self) -> np.ndarray:
        """Total coefficients B_nu for nu = 0..nu_max."""
        return self.b_classical.coeffs + self.zeta_c * self.b_quantum.coeffs

    def coeff(self, nu: int) -> float:
        return self.b_classical.coeff(nu) + self.zeta_c * self.b_quantum.coeff(nu)


def u_min(beta_c: float, phi_x, nu_max: int = 100):
    """Classical minimum energy beta_c * cos_beta(phi_x) of the coupler.

    Equals min over phi_c of (phi_c - phi_x)^2/2 + beta_c cos(phi_c).
    """
    if not 0.0 <= beta_c < 1.0:
        raise ValueError(f"u_min requires 0 <= beta_c < 1, got {beta_c}")
    return beta_c * cos_beta(beta_c, phi_x, nu_max=nu_max)


def u_zpe_harmonic(beta_c: float, zeta_c: float, phi_x):
    """Zero-point energy zeta_c sqrt(1 - beta_c cos(phi_c*)).

    The curvature at the classical minimum phi_c* gives an effective
    oscillator of frequency 2 zeta sqrt(1 - beta cos phi_c*).
    """
    chi = kepler_solve(beta_c, phi_x)
    return zeta_c * np.sqrt(1.0 - beta_c * np.cos(chi))


def _mu_cutoff(beta_c: float, tol: float = 1e-16) -> int:
    """Smallest M with |mu G_mu| < tol for all mu >= M."""
    mu = 1
    while mu < 400:
        if abs(mu * g_coeff(mu, beta_c)) < tol:
            return mu
        mu += 1
    return 400


def b_coeffs(beta_c: float, zeta_c: float, nu_max: int = 100, mu_max: int = 40) -> EgSeries:
    """Interaction series coefficients B_nu^(0), B_nu^(1) for nu <= nu_max.

    The quantum convolution runs over |mu| <= mu_max; the default 40
    suffices for beta_c <= 0.9 (|mu G_mu| decays below 1e-16 there),
    larger beta_c needs more (about 101 at beta_c = 0.95).
    """
    if not 0.0 <= beta_c < 1.0:
        raise ValueError(f"b_coeffs requires 0 <= beta_c < 1, got {beta_c}")
    if nu_max < 1 or mu_max < 1:
        raise ValueError("nu_max and mu_max must be positive")
    g = np.array([g_coeff(mu, beta_c) for mu in range(mu_max + 1)])
    nu = np.arange(1, nu_max + 1)
    classical = np.empty(nu_max + 1)
    classical[0] = -beta_c**2 / 4.0
    classical[1:] = bessel_j(nu, beta_c * nu) / nu**2
    quantum = np.empty(nu_max + 1)
    quantum[0] = g[0] - beta_c * g[1]
    conv = np.zeros(nu_max)
    for mu in range(1, mu_max + 1):
        # mu and -mu combined; G_{-mu} = G_mu
        conv += mu * g[mu] * (bessel_j(nu - mu, beta_c * nu) - bessel_j(nu + mu, beta_c * nu))
    quantum[1:] = conv / nu
    return EgSeries(
        b_classical=FourierSeries(nu_max, classical, parity="even"),
        b_quantum=FourierSeries(nu_max, quantum, parity="even"),
        zeta_c=zeta_c,
        nu_max=nu_max,
        mu_max=mu_max,
    )


def eg_eval(series: EgSeries, phi_x):
    """Series evaluation B_0 + 2 sum_{nu>0} B_nu cos(nu phi_x)."""
    return FourierSeries(series.nu_max, series.coeffs, parity="even")(phi_x)


def eg_exact(params: CouplerParams, phi_x: float, n_basis: int = 50, n_levels: int = 6):
    """Lowest coupler levels by dense Fock-basis diagonalization.

    Energies are in units of E_Ltc.  The basis is the Fock ladder of
    the beta = 0 oscillator (frequency 2 zeta, quadrature amplitude
    sqrt(zeta)); the junction term is the exponential-operator pair
    with half amplitude (beta/2) e^{i phi_x}.
    """
    if n_basis < 30:
        raise ConfigurationError(f"n_basis must be >= 30, got {n_basis}")
    zeta = params.zeta_c
    nm = NormalModeSystem(
        freqs=[2.0 * zeta],
        displacements=[[math.sqrt(zeta)]],
        amplitudes=[0.5 * params.beta_c * np.exp(1j * phi_x)],
        dims=(n_basis,),
    )
    spec = lowest_eigs(assemble_tensor_operator(nm), n_levels, mode="dense")
    return spec.eigenvalues


def eg_derivs_analytic(beta_c: float, zeta_c: float, phi_cx: float) -> tuple:
    """(E_g', E_g'') from the closed-form minimum plus harmonic ZPE.

    With chi the Kepler root at phi_cx and D = 1 - beta cos(chi):

        E_g'  = -beta sin(chi) (1 - zeta / (2 D^{3/2}))
        E_g'' = -beta cos(chi)/D
                + (zeta beta / 2)(cos(chi)/D^{5/2} - 3 beta sin^2(chi)/(2 D^{7/2}))

    Both diverge as beta cos(chi) -> 1; values are returned as they
    come (possibly non-finite), never clamped.
    """
    chi = kepler_solve(beta_c, phi_cx)
    s, c = np.sin(chi), np.cos(chi)
    d = 1.0 - beta_c * c
    d1 = -beta_c * s * (1.0 - zeta_c / (2.0 * d**1.5))
    d2 = -beta_c * c / d + 0.5 * zeta_c * beta_c * (c / d**2.5 - 1.5 * beta_c * s**2 / d**3.5)
    return float(d1), float(d2)


def _exact_ground(params: CouplerParams, phi_x: float, n_basis: int):
    zeta = params.zeta_c
    nm = NormalModeSystem(
        freqs=[2.0 * zeta],
        displacements=[[math.sqrt(zeta)]],
        amplitudes=[0.5 * params.beta_c * np.exp(1j * phi_x)],
        dims=(n_basis,),
    )
    h = assemble_tensor_operator(nm).to_dense()
    vals, vecs = np.linalg.eigh(h)
    return vals, vecs


def eg_derivs_numeric(params: CouplerParams, phi_cx: float, n_basis: int = 50) -> tuple:
    """(E_g', E_g'') from perturbation theory on the exact eigensystem.

    First order: E_g' = <g|(phi_x - phi_c)|g> = -<g|X|g> with X the
    displacement from the quadratic minimum.  Second order: E_g'' =
    1 + 2 <g| X (E_g - H_c)^+ X |g>, the pseudo-inverse excluding the
    ground component (scalar shifts of X drop out against it).
    """
    if n_basis < 30:
        raise ConfigurationError(f"n_basis must be >= 30, got {n_basis}")
    vals, vecs = _exact_ground(params, phi_cx, n_basis)
    if vals[1] - vals[0] < 1e-10:
        raise NumericError(
            "ground state nearly degenerate; perturbation theory ill-conditioned",
            {"gap": float(vals[1] - vals[0])},
        )
    n = np.sqrt(np.arange(1, n_basis))
    x = math.sqrt(params.zeta_c) * (np.diag(n, 1) + np.diag(n, -1))
    xg = vecs.conj().T @ (x @ vecs[:, 0])
    d1 = -xg[0].real
    d2 = 1.0 + 2.0 * np.sum(np.abs(xg[1:]) ** 2 / (vals[0] - vals[1:]))
    return float(d1), float(d2)


def truncation_bound(beta_c: float, zeta_c: float, nu_max: int) -> float:
    """Bound on the coupling error from truncating the series at nu_max.

    The classical and quantum tails are known in closed form; they are
    combined with the relative signs they carry in E_g before taking
    the magnitude, since that signed combination is what a truncated
    coupling computation actually omits.
    """
    if not 0.0 <= beta_c < 1.0:
        raise ValueError(f"truncation_bound requires 0 <= beta_c < 1, got {beta_c}")
    if beta_c == 0.0:
        return 0.0
    series = b_coeffs(beta_c, zeta_c, nu_max=nu_max, mu_max=_mu_cutoff(beta_c))
    r0 = beta_c + beta_c**2 / 4.0 - 2.0 * float(np.sum(series.b_classical.coeffs[1:]))
    g0 = g_coeff(0, beta_c)
    g1 = g_coeff(1, beta_c)
    r1 = math.sqrt(1.0 - beta_c) - g0 + beta_c * g1 \
        - 2.0 * float(np.sum(series.b_quantum.coeffs[1:]))
    return abs(r0 + zeta_c * r1)


def min_nu_for_error(beta_c: float, zeta_c: float, epsilon: float) -> int:
    """Smallest nu_max whose truncation bound is at most epsilon."""
    if epsilon <= 0.0:
        raise ValueError("epsilon must be positive")
    if not 0.0 <= beta_c < 1.0:
        raise ValueError(f"min_nu_for_error requires 0 <= beta_c < 1, got {beta_c}")
    if beta_c == 0.0:
        return 1
    mu_max = _mu_cutoff(beta_c)
    g0 = g_coeff(0, beta_c)
    g1 = g_coeff(1, beta_c)
    tail0 = beta_c + beta_c**2 / 4.0
    tail1 = math.sqrt(1.0 - beta_c) - g0 + beta_c * g1
    cap = 64
    while True:
        series = b_coeffs(beta_c, zeta_c, nu_max=min(cap, MIN_NU_CAP), mu_max=mu_max)
        r0 = tail0 - 2.0 * np.cumsum(series.b_classical.coeffs[1:])
        r1 = tail1 - 2.0 * np.cumsum(series.b_quantum.coeffs[1:])
        bound = np.abs(r0 + zeta_c * r1)
        hits = np.nonzero(bound <= epsilon)[0]
        if len(hits):
            return int(hits[0]) + 1
        if cap >= MIN_NU_CAP:
            raise NumericError(
                f"no nu_max below {MIN_NU_CAP} reaches bound {epsilon}",
                {"best": float(bound.min())},
            )
        cap *= 4


@dataclass(frozen=True)
class BodcMetrics:
    """Diagonal-correction size and the smallness criterion's two sides."""

    exact_norm: float
    linearized_norm: float
    smallness_lhs: float
    smallness_rhs: float


def bodc_metrics(params: CouplerParams, phi_x: float, n_basis: int = 50,
                 qubits=()) -> BodcMetrics:
    """Born-Oppenheimer diagonal correction <d psi_g | d psi_g>.

    exact_norm comes from the eigendecomposition; linearized_norm is
    the harmonic estimate 1/(4 zeta (1 - beta cos chi)^{3/2}).  The
    smallness sides compare the qubit-side energy scale against the
    coupler stiffness: lhs = 2 sum_j E_Lj zeta_j^2 alpha_j^2 / E_Ltc,
    rhs = 4 zeta_c^2 (1 - beta_c)^2; the correction is negligible when
    lhs << rhs.
    """
    if n_basis < 30:
        raise ConfigurationError(f"n_basis must be >= 30, got {n_basis}")
    vals, vecs = _exact_ground(params, phi_x, n_basis)
    if vals[1] - vals[0] < 1e-10:
        raise NumericError(
            "ground state nearly degenerate; diagonal correction ill-conditioned",
            {"gap": float(vals[1] - vals[0])},
        )
    n = np.sqrt(np.arange(1, n_basis))
    x = math.sqrt(params.zeta_c) * (np.diag(n, 1) + np.diag(n, -1))
    xg = vecs.conj().T @ (x @ vecs[:, 0])
    exact = float(np.sum(np.abs(xg[1:]) ** 2 / (vals[0] - vals[1:]) ** 2))
    chi = kepler_solve(params.beta_c, phi_x)
    d = 1.0 - params.beta_c * math.cos(chi)
    linearized = 1.0 / (4.0 * params.zeta_c * d**1.5)
    lhs = 2.0 * sum(q.e_lj * q.zeta_j**2 * q.alpha_j**2 for q in qubits) / params.e_ltc
    rhs = 4.0 * params.zeta_c**2 * (1.0 - params.beta_c) ** 2
    return BodcMetrics(exact, linearized, lhs, rhs)
