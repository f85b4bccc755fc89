"""Kapteyn-series inversion of the junction phase relation.

The classical minimum of the coupler potential u(chi) = (chi - phi)^2/2
+ beta*cos(chi) satisfies a Kepler-type equation in the minimizing
phase chi:

    chi - phi - beta*sin(chi) = 0,      0 <= beta < 1.

Every 2*pi-periodic function of chi is then a Fourier series in phi
whose coefficients are Bessel functions evaluated at integer multiples
of their order (a Kapteyn series).  The building blocks:

    e^{i mu chi} = sum_nu A_nu^(mu) e^{i nu phi}

    A_nu^(mu) = delta_{mu,0} - (beta/2)(delta_{mu,1} + delta_{mu,-1})   nu = 0
              = mu * J_{nu-mu}(beta*nu) / nu                            nu != 0

    sin_beta(phi) = sin(chi(phi))
                  = sum_{nu>0} (2 J_nu(beta*nu) / (beta*nu)) sin(nu*phi)

    cos_beta(phi) = 1 - integral_0^phi sin_beta
                  = 1 + sum_{nu>0} (2 J_nu(beta*nu) / (beta*nu^2)) (cos(nu*phi) - 1)

and the Fourier coefficients of the square-root kernel

    sqrt(1 - beta*cos(theta)) = sum_mu G_mu(beta) e^{i mu theta},
    G_mu = sum_{l>=0} C(1/2, mu+2l) C(mu+2l, l) (-beta/2)^{mu+2l},

with C(1/2, k) the generalized binomial coefficient.  Useful closed
forms, both consequences of the defining equation:

    d sin_beta / d phi = cos(chi) / (1 - beta*cos(chi))
    cos_beta(phi)      = (beta/2) sin_beta(phi)^2 + cos(chi)

The Newton solver ``kepler_solve`` is the ground truth all series are
validated against.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import jv

__all__ = [
    "FourierSeries",
    "bessel_j",
    "kepler_solve",
    "sin_beta",
    "cos_beta",
    "exp_mu_coeff",
    "g_coeff",
]


def bessel_j(order, x):
    """Bessel function of the first kind at integer order.

    Vectorized over both arguments.  Relative accuracy is better than
    1e-12 on the regime this module exercises (|order| <= 500 with
    |x| <= |order|, i.e. below the turning point where J_nu(beta*nu)
    decays exponentially in nu).
    """
    order = np.asarray(order)
    if not np.issubdtype(order.dtype, np.integer):
        rounded = np.rint(order)
        if np.any(rounded != order):
            raise ValueError("bessel_j expects integer orders")
        order = rounded.astype(int)
    return jv(order, x)


def kepler_solve(beta: float, phi_x, tol: float = 1e-14, max_iter: int = 100):
    """Solve chi - phi_x - beta*sin(chi) = 0 for chi by damped Newton.

    For 0 <= beta < 1 the left side is strictly increasing in chi
    (derivative 1 - beta*cos >= 1 - beta > 0), so the root is unique.
    Steps are clipped to pi to avoid overshoot where the curvature
    changes sign.  Residual at return is <= tol (absolute).
    """
    if not 0.0 <= beta < 1.0:
        raise ValueError(f"kepler_solve requires 0 <= beta < 1, got {beta}")
    phi_in = np.asarray(phi_x, dtype=float)
    phi = np.atleast_1d(phi_in)
    chi = phi.copy()
    for _ in range(max_iter):
        f = chi - phi - beta * np.sin(chi)
        active = np.abs(f) > tol
        if not np.any(active):
            break
        step = np.clip(f / (1.0 - beta * np.cos(chi)), -np.pi, np.pi)
        chi = chi - np.where(active, step, 0.0)
    else:
        resid = np.max(np.abs(chi - phi - beta * np.sin(chi)))
        raise RuntimeError(f"kepler_solve did not converge: residual {resid:.3e}")
    return chi if phi_in.ndim else float(chi[0])


def _sin_coeffs(beta: float, nu_max: int) -> np.ndarray:
    """Sine-series coefficients of sin_beta for nu = 1..nu_max.

    coeff_nu = 2 J_nu(beta*nu)/(beta*nu); the beta -> 0 limit is the
    Kronecker delta at nu = 1 (J_1(x) ~ x/2).
    """
    nu = np.arange(1, nu_max + 1)
    if beta == 0.0:
        c = np.zeros(nu_max)
        c[0] = 1.0
        return c
    return 2.0 * bessel_j(nu, beta * nu) / (beta * nu)


def sin_beta(beta: float, phi, nu_max: int = 100):
    """Junction-current function sin(chi(phi)) as a truncated sine series.

    Odd and 2*pi-periodic in phi.  Satisfies the self-consistency
    relation sin_beta(phi) = sin(phi + beta*sin_beta(phi)) up to
    truncation error.
    """
    _check_series_args(beta, nu_max)
    phi = np.asarray(phi, dtype=float)
    nu = np.arange(1, nu_max + 1)
    out = np.sin(phi[..., None] * nu) @ _sin_coeffs(beta, nu_max)
    return out if out.ndim else float(out)


def cos_beta(beta: float, phi, nu_max: int = 100):
    """Antiderivative form 1 - integral_0^phi sin_beta, truncated.

    Even and 2*pi-periodic, with cos_beta(0) = 1 exactly at any
    truncation; the full-series mean over a period is -beta/4.
    """
    _check_series_args(beta, nu_max)
    phi = np.asarray(phi, dtype=float)
    nu = np.arange(1, nu_max + 1)
    c = _sin_coeffs(beta, nu_max) / nu
    out = 1.0 + (np.cos(phi[..., None] * nu) - 1.0) @ c
    return out if out.ndim else float(out)


def exp_mu_coeff(mu: int, nu: int, beta: float) -> float:
    """Fourier coefficient A_nu^(mu) of e^{i mu chi(phi)}.

    Real for all integer mu, nu.  The nu = 0 row is the degenerate
    case fixed by direct integration.
    """
    if nu == 0:
        if mu == 0:
            return 1.0
        if abs(mu) == 1:
            return -beta / 2.0
        return 0.0
    return mu * float(bessel_j(nu - mu, beta * nu)) / nu


def g_coeff(mu: int, beta: float, tiny: float = 1e-16, max_terms: int = 100000) -> float:
    """Fourier coefficient G_mu of sqrt(1 - beta*cos(theta)).

    Even in mu.  The defining hypergeometric-type sum is accumulated
    through the term ratio

        t_{l+1}/t_l = (beta/2)^2 (mu+2l-1/2)(mu+2l+1/2) / ((l+1)(mu+l+1)),

    which tends to beta^2 < 1, so terms are eventually geometric.  For
    large mu the terms first grow (the ratio starts near (beta/2)^2 mu)
    before decaying, so the sum stops on |t_l| < tiny only once the
    terms are shrinking; the ratio crosses 1 exactly once, which makes
    that stopping rule safe.
    """
    if not 0.0 <= beta < 1.0:
        raise ValueError(f"g_coeff requires 0 <= beta < 1, got {beta}")
    mu = abs(int(mu))
    # t_0 = C(1/2, mu) * (-beta/2)^mu
    t = (-beta / 2.0) ** mu
    for k in range(mu):
        t *= (0.5 - k) / (k + 1.0)
    total = t
    prev = abs(t)
    for l in range(max_terms):
        t *= (beta / 2.0) ** 2 * (mu + 2 * l - 0.5) * (mu + 2 * l + 0.5) / ((l + 1.0) * (mu + l + 1.0))
        total += t
        if abs(t) < tiny and abs(t) <= prev:
            return total
        prev = abs(t)
    raise RuntimeError(f"g_coeff sum did not terminate for mu={mu}, beta={beta}")


def _check_series_args(beta: float, nu_max: int) -> None:
    if not 0.0 <= beta < 1.0:
        raise ValueError(f"series require 0 <= beta < 1, got beta={beta}")
    if nu_max < 1:
        raise ValueError(f"nu_max must be >= 1, got {nu_max}")


@dataclass
class FourierSeries:
    """Real-coefficient truncated Fourier series on [-pi, pi).

    ``coeffs`` stores the half-spectrum c_nu for nu = 0..nu_max; the
    declared parity fixes the other half.  Evaluation conventions:

        even:    f(phi) = c_0 + sum_{nu>0} 2 c_nu cos(nu*phi)
        odd:     f(phi) =       sum_{nu>0} 2 c_nu sin(nu*phi)   (c_0 = 0)
        general: f(phi) =       sum_{nu>=0}  c_nu e^{i nu phi}  (complex)

    so even/odd series evaluate to real numbers with the mirror
    coefficient at -nu equal to +c_nu (even) or -c_nu (odd).  Only
    even and odd series occur in this package.
    """

    nu_max: int
    coeffs: np.ndarray
    parity: str = "even"
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=float)
        if self.parity not in ("even", "odd", "general"):
            raise ValueError(f"unknown parity {self.parity!r}")
        if self.coeffs.shape != (self.nu_max + 1,):
            raise ValueError(
                f"coeffs must have shape ({self.nu_max + 1},), got {self.coeffs.shape}"
            )
        if self.parity == "odd" and self.coeffs[0] != 0.0:
            raise ValueError("odd series must have zero mean coefficient")
        if not np.all(np.isfinite(self.coeffs)):
            raise ValueError("non-finite Fourier coefficient")

    def coeff(self, nu: int) -> float:
        """Coefficient at signed index nu in [-nu_max, nu_max]."""
        if abs(nu) > self.nu_max:
            raise IndexError(f"|nu| = {abs(nu)} exceeds nu_max = {self.nu_max}")
        c = self.coeffs[abs(nu)]
        if nu < 0 and self.parity == "odd":
            return -c
        if nu < 0 and self.parity == "general":
            raise IndexError("general series stores only nu >= 0")
        return float(c)

    def evaluate(self, phi):
        phi = np.asarray(phi, dtype=float)
        nu = np.arange(1, self.nu_max + 1)
        if self.parity == "even":
            out = self.coeffs[0] + 2.0 * (np.cos(phi[..., None] * nu) @ self.coeffs[1:])
        elif self.parity == "odd":
            out = 2.0 * (np.sin(phi[..., None] * nu) @ self.coeffs[1:])
        else:
            full = np.arange(0, self.nu_max + 1)
            out = np.exp(1j * phi[..., None] * full) @ self.coeffs
        return out if out.ndim else out[()]

    def __call__(self, phi):
        return self.evaluate(phi)
