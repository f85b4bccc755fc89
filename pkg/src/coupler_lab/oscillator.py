"""Truncated Fock-space machinery for the coupled-circuit Hamiltonian.

The circuit Hamiltonian, after normal-mode decomposition of its
quadratic part, is a sum of oscillator ladders and junction cosines

    H = sum_n w_n (a_n^dag a_n + 1/2)
      + sum_m [ C_m exp(i sum_n r_mn (a_n + a_n^dag)) + h.c. ],

where each cosine term m comes from one junction, C_m carries half the
junction energy and the phase offset at the quadratic minimum, and
r_mn is the zero-point amplitude of coordinate m along mode n.  The
factor matrices are exponentials of the dimensionless quadrature,
evaluated per element through generalized Laguerre polynomials:

    <j|e^{irX}|k> = i^{k-j} sqrt(j!/k!) e^{-r^2/2} r^{k-j} L_j^{(k-j)}(r^2)

for j <= k, X = a + a^dag, with the j > k entry equal by symmetry.
These matrices are complex symmetric, so the Hermitian pairing above
is elementwise conjugation; applying a paired term to a real vector
costs one tensor contraction and a real part.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, NumericError, ResourceError

__all__ = [
    "NormalModeSystem",
    "Spectrum",
    "TensorOperator",
    "assemble_tensor_operator",
    "ho_exp_matrix",
    "ho_exp_matrix_element",
    "lowest_eigs",
    "normal_modes",
]

DENSE_DIM_LIMIT = 8192
ITERATIVE_M_LIMIT = 32
DEFAULT_MEMORY_BUDGET = 4 << 30
_LANCZOS_SEED = 175_1031


def _fused_diagonal(r: float, a: int, count: int) -> np.ndarray:
    """Values M_j = <j|e^{irX}|j+a>/i^a for j = 0..count-1, offset a >= 0.

    Runs the Laguerre three-term recurrence with the normalization
    sqrt(j!/(j+a)!) e^{-r^2/2} r^a folded in, so intermediate values
    stay near the final element magnitudes.  A power-of-two rescaling
    guards against underflow of the leading element when a is large
    (the true elements deeper along the diagonal need not be small).
    """
    x = r * r
    out = np.zeros(count)
    # log of M_0 = e^{-x/2} |r|^a / sqrt(a!)
    if r == 0.0:
        if a == 0:
            out[:] = 1.0
        return out
    log_m0 = -0.5 * x + a * math.log(abs(r)) - 0.5 * math.lgamma(a + 1)
    sign = -1.0 if (r < 0.0 and a % 2) else 1.0
    scale_pow = 0
    if log_m0 < -600.0:
        shift = int((-600.0 - log_m0) / math.log(2.0)) + 1
        scale_pow = -shift
        m_curr = sign * math.exp(log_m0 + shift * math.log(2.0))
    else:
        m_curr = sign * math.exp(log_m0)
    m_prev = 0.0
    out[0] = math.ldexp(m_curr, scale_pow) if scale_pow else m_curr
    for j in range(count - 1):
        # M_{j+1} from the L_{j+1}^{(a)} recurrence with normalization ratios
        ca = math.sqrt((j + 1.0) / (j + a + 1.0))
        cb = math.sqrt((j + 1.0) * j / ((j + a + 1.0) * (j + a))) if j > 0 else 0.0
        m_next = (ca * (2 * j + 1 + a - x) * m_curr - cb * (j + a) * m_prev) / (j + 1.0)
        m_prev, m_curr = m_curr, m_next
        if scale_pow and abs(m_curr) > 1.0:
            # hand part of the pending scale back as the entries grow
            step = min(-scale_pow, 900)
            m_curr = math.ldexp(m_curr, -step)
            m_prev = math.ldexp(m_prev, -step)
            scale_pow += step
        out[j + 1] = math.ldexp(m_curr, scale_pow) if scale_pow else m_curr
    return out


def ho_exp_matrix_element(j: int, k: int, r: float) -> complex:
    """Matrix element <j|exp(ir(a+a^dag))|k> in the number basis.

    Symmetric in (j, k); real for k-j divisible by 4, etc., through the
    i^{k-j} phase.  Stable for orders up to 1e4 via a normalized
    Laguerre recurrence.
    """
    if j < 0 or k < 0:
        raise ValueError("Fock indices must be non-negative")
    if not math.isfinite(r):
        raise ValueError("displacement must be finite")
    if j > k:
        j, k = k, j
    a = k - j
    val = _fused_diagonal(r, a, j + 1)[j]
    return (1j) ** (a % 4) * val


def ho_exp_matrix(r: float, dim: int) -> np.ndarray:
    """Dense dim x dim matrix of exp(ir(a+a^dag)), complex symmetric."""
    if dim < 1:
        raise ValueError("dim must be >= 1")
    out = np.zeros((dim, dim), dtype=complex)
    for a in range(dim):
        vals = _fused_diagonal(r, a, dim - a)
        phase = (1j) ** (a % 4)
        idx = np.arange(dim - a)
        out[idx, idx + a] = phase * vals
        if a:
            out[idx + a, idx] = phase * vals
    return out


@dataclass(frozen=True)
class NormalModeSystem:
    """Normal-mode form of the coupled circuit.

    freqs are sorted ascending.  displacements[m, n] is the amplitude
    of cosine term m along mode n; amplitudes[m] is the half junction
    energy with the bias offset folded into its phase (each stored term
    stands for itself plus its Hermitian conjugate).  dims, when set,
    assigns per-mode truncations in the sorted-mode order, so the
    highest-frequency mode carries the last entry.
    """

    freqs: np.ndarray
    displacements: np.ndarray
    amplitudes: np.ndarray
    dims: tuple | None = None

    def __post_init__(self):
        object.__setattr__(self, "freqs", np.asarray(self.freqs, dtype=float))
        object.__setattr__(self, "displacements", np.asarray(self.displacements, dtype=float))
        object.__setattr__(self, "amplitudes", np.asarray(self.amplitudes, dtype=complex))
        if np.any(self.freqs <= 0.0):
            raise ConfigurationError("mode frequencies must be positive")
        if np.any(np.diff(self.freqs) < 0.0):
            raise ConfigurationError("mode frequencies must be sorted ascending")
        n_terms, n_modes = self.displacements.shape
        if len(self.freqs) != n_modes or len(self.amplitudes) != n_terms:
            raise ConfigurationError("inconsistent mode/term counts")
        if self.dims is not None:
            object.__setattr__(self, "dims", tuple(int(d) for d in self.dims))
            if len(self.dims) != n_modes or any(d < 1 for d in self.dims):
                raise ConfigurationError("dims must give a positive size per mode")

    @property
    def n_modes(self) -> int:
        return len(self.freqs)

    def with_dims(self, dims) -> "NormalModeSystem":
        return NormalModeSystem(self.freqs, self.displacements, self.amplitudes, tuple(dims))


def normal_modes(system, dims=None) -> NormalModeSystem:
    """Normal-mode decomposition of the circuit's quadratic part.

    ``system`` describes one coupler plus its qubits: attributes e_ltc,
    zeta_c, beta_c, phi_cx, and a sequence ``qubits`` whose entries
    carry e_lj, zeta_j, beta_j, alpha_j, phi_jx.  The potential is

        E_Ltc [ (phi_c + sum_j alpha_j phi_j - phi_cx)^2/2 + beta_c cos(phi_c) ]
        + sum_j E_Lj [ (phi_j - phi_jx)^2/2 + beta_j cos(phi_j) ]

    with kinetic weight 4 zeta^2 E_L per coordinate.  The origin is
    shifted to the quadratic minimum (phi_j = phi_jx, phi_c = phi_cx -
    sum alpha_j phi_jx), which leaves no linear terms and puts the
    minimum phases into the cosine offsets.  The generalized symmetric
    problem is solved as eig(sqrt(T) K sqrt(T)); coordinate m then
    carries zero-point amplitude R[m, n] = sqrt(T_m) V[m, n] /
    sqrt(2 w_n) along mode n.
    """
    qubits = list(system.qubits)
    e_ltc = float(system.e_ltc)
    zeta_c = float(system.zeta_c)
    if e_ltc <= 0.0 or zeta_c <= 0.0:
        raise ConfigurationError("coupler energies must be positive")
    n = len(qubits) + 1
    kinetic = np.zeros(n)
    stiff = np.zeros((n, n))
    kinetic[0] = 4.0 * zeta_c**2 * e_ltc
    stiff[0, 0] = e_ltc
    for i, q in enumerate(qubits, start=1):
        if q.e_lj <= 0.0 or q.zeta_j <= 0.0:
            raise ConfigurationError(f"qubit {i} energies must be positive")
        kinetic[i] = 4.0 * q.zeta_j**2 * q.e_lj
        stiff[0, i] = stiff[i, 0] = e_ltc * q.alpha_j
        for i2, q2 in enumerate(qubits, start=1):
            stiff[i, i2] = e_ltc * q.alpha_j * q2.alpha_j
        stiff[i, i] += q.e_lj
    sq = np.sqrt(kinetic)
    w2, vecs = np.linalg.eigh(sq[:, None] * stiff * sq[None, :])
    if w2[0] <= 0.0:
        raise ConfigurationError("quadratic form is not positive definite")
    freqs = np.sqrt(w2)
    # deterministic eigenvector signs: largest component positive
    flip = np.sign(vecs[np.argmax(np.abs(vecs), axis=0), np.arange(n)])
    vecs = vecs * flip
    disp = sq[:, None] * vecs / np.sqrt(2.0 * freqs)[None, :]
    offsets = np.empty(n)
    offsets[0] = system.phi_cx - sum(q.alpha_j * q.phi_jx for q in qubits)
    amps = np.empty(n, dtype=complex)
    amps[0] = 0.5 * system.beta_c * e_ltc * np.exp(1j * offsets[0])
    for i, q in enumerate(qubits, start=1):
        offsets[i] = q.phi_jx
        amps[i] = 0.5 * q.beta_j * q.e_lj * np.exp(1j * offsets[i])
    return NormalModeSystem(freqs, disp, amps, None if dims is None else tuple(dims))


class TensorOperator:
    """Matrix-free Hermitian operator on a tensor-product Fock space.

    Holds a diagonal ladder part and a list of (coefficient, per-mode
    factor matrix) cosine terms, each standing for the stored term plus
    its conjugate.  Immutable after construction; matvec application is
    read-only and safe to call concurrently.
    """

    def __init__(self, dims, diag, terms):
        self.dims = tuple(int(d) for d in dims)
        self.size = int(np.prod(self.dims))
        self.diag = np.asarray(diag, dtype=float).reshape(self.dims)
        self.terms = [(complex(c), [np.asarray(u) for u in us]) for c, us in terms]
        for c, us in self.terms:
            if len(us) != len(self.dims):
                raise ConfigurationError("each term needs one factor per mode")
            for n, u in enumerate(us):
                if u.shape != (self.dims[n], self.dims[n]):
                    raise ConfigurationError("factor shape mismatch")

    @property
    def shape(self):
        return (self.size, self.size)

    def matvec(self, v: np.ndarray) -> np.ndarray:
        """Apply to one real vector (size,) or a real block (size, b)."""
        v = np.asarray(v)
        if np.iscomplexobj(v):
            raise ValueError("TensorOperator acts on real vectors")
        single = v.ndim == 1
        t = v.reshape(self.dims + (-1,))
        out = self.diag[..., None] * t
        for c, us in self.terms:
            z = t.astype(complex)
            for n, u in enumerate(us):
                z = np.moveaxis(np.tensordot(u, z, axes=(1, n)), 0, n)
            out = out + 2.0 * np.real(c * z)
        return out.reshape(self.size) if single else out.reshape(self.size, -1)

    def to_dense(self) -> np.ndarray:
        if self.size > DENSE_DIM_LIMIT:
            raise ResourceError(
                f"dense materialization of a {self.size}-dim operator exceeds the"
                f" {DENSE_DIM_LIMIT}-dim limit"
            )
        out = np.empty((self.size, self.size))
        block = 512
        eye = np.eye(self.size)
        for lo in range(0, self.size, block):
            hi = min(lo + block, self.size)
            out[:, lo:hi] = self.matvec(eye[:, lo:hi])
        return out


def assemble_tensor_operator(system: NormalModeSystem,
                             memory_budget: int = DEFAULT_MEMORY_BUDGET) -> TensorOperator:
    """Build the matrix-free operator for a normal-mode system.

    Factor matrices are computed once per (term, mode); the ladder part
    sum_n w_n (k + 1/2) is stored as a diagonal.  The projected memory
    footprint (factors plus matvec temporaries) is checked against the
    budget before anything is allocated.
    """
    if system.dims is None:
        raise ConfigurationError("system has no dims; call with_dims first")
    dims = system.dims
    n_terms = len(system.amplitudes)
    size = int(np.prod(dims))
    factor_bytes = 16 * n_terms * sum(d * d for d in dims)
    # matvec workspace: complex intermediate + real accumulator + input copy
    work_bytes = size * (16 + 8 + 8)
    if factor_bytes + work_bytes > memory_budget:
        raise ResourceError(
            f"assembly needs ~{(factor_bytes + work_bytes) / 2**20:.0f} MiB,"
            f" over the {memory_budget / 2**20:.0f} MiB budget"
        )
    diag = np.zeros(dims)
    for n, d in enumerate(dims):
        shape = [1] * len(dims)
        shape[n] = d
        diag = diag + (system.freqs[n] * (np.arange(d) + 0.5)).reshape(shape)
    terms = []
    for m in range(n_terms):
        us = [ho_exp_matrix(system.displacements[m, n], dims[n]) for n in range(len(dims))]
        terms.append((system.amplitudes[m], us))
    return TensorOperator(dims, diag, terms)


@dataclass
class Spectrum:
    """Sorted eigenvalues with optional vectors and solver metadata."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray | None = None
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.eigenvalues = np.asarray(self.eigenvalues, dtype=float)
        if np.any(np.diff(self.eigenvalues) < 0.0):
            raise ValueError("eigenvalues must be non-decreasing")

    @property
    def excitations(self) -> np.ndarray:
        return self.eigenvalues[1:] - self.eigenvalues[0]


def _fix_vector_signs(vecs: np.ndarray) -> np.ndarray:
    idx = np.argmax(np.abs(vecs), axis=0)
    flip = np.sign(vecs[idx, np.arange(vecs.shape[1])])
    flip[flip == 0.0] = 1.0
    return vecs * flip


def _dense_lowest(h: np.ndarray, m: int, want_vectors: bool) -> Spectrum:
    vals, vecs = np.linalg.eigh(h)
    vals = vals[:m]
    vecs = _fix_vector_signs(vecs[:, :m])
    resid = np.linalg.norm(h @ vecs - vecs * vals[None, :], axis=0)
    return Spectrum(vals, vecs if want_vectors else None,
                    {"solver": "dense", "dim": h.shape[0], "residuals": resid})


def _block_lanczos(op: TensorOperator, m: int, tol: float, want_vectors: bool,
                   memory_budget: int) -> Spectrum:
    n = op.size
    block = min(max(m, 2), 16, n)
    max_steps = 4 * m + 200
    max_basis = min(n, block * max_steps)
    basis_bytes = 8 * (n * (max_basis + 2 * block) + max_basis**2)
    if basis_bytes > memory_budget:
        raise ResourceError(
            f"Lanczos basis would need ~{basis_bytes / 2**20:.0f} MiB,"
            f" over the {memory_budget / 2**20:.0f} MiB budget"
        )
    rng = np.random.default_rng(_LANCZOS_SEED)
    basis = np.empty((n, max_basis))
    q, _ = np.linalg.qr(rng.standard_normal((n, block)))
    basis[:, :block] = q
    k = block
    t_proj = np.zeros((max_basis, max_basis))
    prev_b = None
    best = None
    for step in range(max_steps):
        lo = k - block
        q = basis[:, lo:k]
        w = op.matvec(q)
        a = q.T @ w
        t_proj[lo:k, lo:k] = 0.5 * (a + a.T)
        if prev_b is not None:
            t_proj[lo - block:lo, lo:k] = prev_b.T
            t_proj[lo:k, lo - block:lo] = prev_b
        # full reorthogonalization against everything built so far, twice
        w = w - basis[:, :k] @ (basis[:, :k].T @ w)
        w = w - basis[:, :k] @ (basis[:, :k].T @ w)
        vals, s = np.linalg.eigh(t_proj[:k, :k])
        width = max(vals[-1] - vals[0], np.finfo(float).eps)
        if k >= m:
            # H V = V T + W E_last^T, so the Ritz residual is ||W s_bottom||
            res_est = np.linalg.norm(w @ s[lo:k, :m], axis=0)
            best = (vals[:m].copy(), s[:, :m].copy(), k, res_est, width)
            if np.all(res_est <= tol * width):
                break
        if k + block > max_basis or k >= n:
            break
        q_next, r_fac = np.linalg.qr(w)
        norms = np.abs(np.diag(r_fac))
        dead = norms < 1e-12 * max(1.0, np.max(norms))
        if np.any(dead):
            # invariant-subspace deflation: refresh dead directions
            fresh = rng.standard_normal((n, int(dead.sum())))
            fresh = fresh - basis[:, :k] @ (basis[:, :k].T @ fresh)
            q_next[:, dead] = np.linalg.qr(fresh)[0]
            r_fac[dead, :] = 0.0
        basis[:, k:k + block] = q_next
        prev_b = r_fac
        k += block
    if best is None:
        raise NumericError("Lanczos produced no Ritz estimates", {"basis": k})
    vals, s, k_used, res_est, width = best
    vecs = _fix_vector_signs(basis[:, :k_used] @ s)
    true_res = np.linalg.norm(op.matvec(vecs) - vecs * vals[None, :], axis=0)
    meta = {"solver": "lanczos", "dim": n, "basis": k_used,
            "residuals": true_res, "block": block}
    if k_used < n and np.any(true_res > 10.0 * tol * width):
        raise NumericError(
            f"Lanczos did not converge in {max_steps} steps",
            {"residuals": true_res.tolist(), "basis": k_used},
        )
    return Spectrum(vals, vecs if want_vectors else None, meta)


def lowest_eigs(op, m: int, mode: str = "auto", want_vectors: bool = False,
                tol: float = 1e-9, memory_budget: int = DEFAULT_MEMORY_BUDGET) -> Spectrum:
    """Lowest m eigenvalues of a TensorOperator or dense symmetric matrix.

    mode "dense" runs a full symmetric eigendecomposition (allowed up
    to 8192 dims); "iterative" runs matrix-free block Lanczos with full
    reorthogonalization (m <= 32); "auto" picks dense when it fits.
    """
    if isinstance(op, np.ndarray):
        size = op.shape[0]
        if mode == "iterative":
            raise ConfigurationError("iterative mode needs a TensorOperator")
        if size > DENSE_DIM_LIMIT:
            raise ConfigurationError(f"dense solve limited to {DENSE_DIM_LIMIT} dims")
        if m > size:
            raise ConfigurationError("m exceeds operator dimension")
        return _dense_lowest(op, m, want_vectors)
    if mode == "auto":
        mode = "dense" if op.size <= DENSE_DIM_LIMIT else "iterative"
    if m > op.size:
        raise ConfigurationError("m exceeds operator dimension")
    if mode == "dense":
        if op.size > DENSE_DIM_LIMIT:
            raise ConfigurationError(f"dense solve limited to {DENSE_DIM_LIMIT} dims")
        return _dense_lowest(op.to_dense(), m, want_vectors)
    if mode != "iterative":
        raise ConfigurationError(f"unknown solver mode {mode!r}")
    if m > ITERATIVE_M_LIMIT:
        raise ConfigurationError(f"iterative solver limited to m <= {ITERATIVE_M_LIMIT}")
    return _block_lanczos(op, m, tol, want_vectors, memory_budget)
