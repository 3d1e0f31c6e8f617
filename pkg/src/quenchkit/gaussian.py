"""Phase-space machinery for zero-mean Gaussian states of harmonic lattices.

All states are represented by their 2N x 2N covariance matrix
sigma_jk = 1/2 <x_j x_k + x_k x_j> in the q-p basis x = (q_1..q_N, p_1..p_N).
The symplectic form in this basis is Upsilon = [[0, I], [-I, 0]].

Hamiltonians are H = 1/2 x^T F x with F = V + I (no momentum-momentum
coupling), which admits the shortcut Williamson decomposition
V = O Omega^2 O^T  =>  S = (O Omega^{-1/2}) + (O Omega^{+1/2})
giving S^T F S = Omega + Omega and S^T Upsilon S = Upsilon.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
import scipy.linalg as sla

__all__ = [
    "GaussianError",
    "InstabilityError",
    "NormalModeBasis",
    "CovarianceTrajectory",
    "symplectic_form",
    "williamson_from_potential",
    "williamson",
    "thermal_occupations",
    "thermal_covariance",
    "product_initial_state",
    "propagator",
    "evolve",
    "marginal",
    "marginal_indices",
    "gaussian_fidelity",
    "bures_distance",
    "fidelity_from_distance",
    "mean_energy",
    "symplectic_eigenvalues",
    "symplecticity_residual",
    "is_physical",
    "coth",
]


class GaussianError(ValueError):
    """Numerically or physically invalid Gaussian-state operation."""


class InstabilityError(GaussianError):
    """Potential matrix is not positive definite: no stable normal modes."""


def symplectic_form(n: int) -> np.ndarray:
    """Dense symplectic form Upsilon = [[0, I], [-I, 0]] for n modes."""
    ups = np.zeros((2 * n, 2 * n))
    ups[:n, n:] = np.eye(n)
    ups[n:, :n] = -np.eye(n)
    return ups


def _ups_left(m: np.ndarray) -> np.ndarray:
    """Upsilon @ m without forming Upsilon."""
    n = m.shape[0] // 2
    return np.vstack((m[n:], -m[:n]))


def _ups_right(m: np.ndarray) -> np.ndarray:
    """m @ Upsilon without forming Upsilon."""
    n = m.shape[1] // 2
    return np.hstack((-m[:, n:], m[:, :n]))


def coth(x: np.ndarray | float) -> np.ndarray | float:
    """coth for x > 0, stable for both tiny and huge arguments."""
    x = np.asarray(x, dtype=float)
    with np.errstate(over="ignore"):
        out = 1.0 + 2.0 / np.expm1(2.0 * x)
    return out if out.ndim else float(out)


def _symmetrize(m: np.ndarray) -> np.ndarray:
    return 0.5 * (m + m.T)


@dataclass(frozen=True)
class NormalModeBasis:
    """Symplectic normal-mode transform of a potential V.

    s          : 2N x 2N symplectic matrix, x = s X
    omega      : N normal frequencies, ascending (strictly positive)
    orthogonal : the N x N orthogonal factor diagonalizing V (None after a
                 degenerate-block rotation, where s is no longer block-diagonal)
    rotated    : True when degenerate blocks were re-mixed (see gge module)
    """

    s: np.ndarray
    omega: np.ndarray
    orthogonal: np.ndarray | None = None
    rotated: bool = False

    @property
    def n_modes(self) -> int:
        return self.omega.shape[0]

    def s_inv(self) -> np.ndarray:
        """Symplectic inverse S^{-1} = -Upsilon S^T Upsilon (no general inversion)."""
        return -_ups_left(_ups_right(self.s.T))

    def to_normal(self, sigma: np.ndarray) -> np.ndarray:
        """Covariance in normal coordinates: S^{-1} sigma S^{-T}."""
        s_inv = self.s_inv()
        return _symmetrize(s_inv @ sigma @ s_inv.T)

    def from_normal(self, sigma_normal: np.ndarray) -> np.ndarray:
        """Covariance in the q-p basis: S sigma_normal S^T."""
        return _symmetrize(self.s @ sigma_normal @ self.s.T)

    def with_s(self, s_new: np.ndarray) -> "NormalModeBasis":
        return replace(self, s=s_new, orthogonal=None, rotated=True)


def williamson_from_potential(v: np.ndarray, rel_tol: float = 1e-12) -> NormalModeBasis:
    """Normal modes of H = 1/2 x^T (V + I) x via the orthogonal shortcut.

    Raises InstabilityError when V has an eigenvalue <= rel_tol * ||V||.
    """
    v = np.asarray(v, dtype=float)
    w, o = np.linalg.eigh(_symmetrize(v))
    scale = float(np.max(np.abs(w))) if w.size else 0.0
    if w[0] <= rel_tol * scale:
        raise InstabilityError(
            f"potential is not positive definite: min eigenvalue {w[0]:.3e} "
            f"(threshold {rel_tol * scale:.3e})"
        )
    omega = np.sqrt(w)
    n = omega.shape[0]
    s = np.zeros((2 * n, 2 * n))
    s[:n, :n] = o / np.sqrt(omega)[None, :]
    s[n:, n:] = o * np.sqrt(omega)[None, :]
    return NormalModeBasis(s=s, omega=omega, orthogonal=o)


def thermal_occupations(omega: np.ndarray, temperature: float) -> np.ndarray:
    """Diagonal normal-mode covariances R_j = 1/2 coth(Omega_j / 2T); 1/2 at T = 0."""
    omega = np.asarray(omega, dtype=float)
    if temperature < 0:
        raise GaussianError(f"temperature must be >= 0, got {temperature}")
    if temperature == 0.0:
        return np.full_like(omega, 0.5)
    return 0.5 * coth(omega / (2.0 * temperature))


def thermal_covariance(basis: NormalModeBasis, temperature: float) -> np.ndarray:
    """Covariance of the Gibbs state at the given temperature (vacuum at T = 0)."""
    r = thermal_occupations(basis.omega, temperature)
    rr = np.concatenate((r, r))
    return _symmetrize((basis.s * rr[None, :]) @ basis.s.T)


def product_initial_state(sigma_a: np.ndarray, sigma_b: np.ndarray) -> np.ndarray:
    """Covariance of an uncorrelated pair, reordered to (q_A, q_B, p_A, p_B)."""
    na = sigma_a.shape[0] // 2
    nb = sigma_b.shape[0] // 2
    n = na + nb
    sigma = np.zeros((2 * n, 2 * n))
    # index maps from each subsystem's (q, p) rows into the joint ordering
    idx_a = np.concatenate((np.arange(na), n + np.arange(na)))
    idx_b = np.concatenate((na + np.arange(nb), n + na + np.arange(nb)))
    sigma[np.ix_(idx_a, idx_a)] = sigma_a
    sigma[np.ix_(idx_b, idx_b)] = sigma_b
    return sigma


def _mode_rotation_apply(
    omega: np.ndarray, t: float, m: np.ndarray, transpose: bool = False
) -> np.ndarray:
    """R(t) @ m (or R(t)^T @ m) where R(t) is the normal-mode block rotation."""
    n = omega.shape[0]
    c = np.cos(omega * t)[:, None]
    s = np.sin(omega * t)[:, None]
    if transpose:
        s = -s
    top, bot = m[:n], m[n:]
    return np.vstack((c * top + s * bot, -s * top + c * bot))


def propagator(basis: NormalModeBasis, t: float) -> np.ndarray:
    """Time-evolution matrix E(t) = S [[cos Wt, sin Wt], [-sin Wt, cos Wt]] S^{-1}.

    Equals the matrix exponential e^{Upsilon F t} for F = V + I.
    """
    s_inv = basis.s_inv()
    return basis.s @ _mode_rotation_apply(basis.omega, t, s_inv)


def evolve(sigma0: np.ndarray, e: np.ndarray) -> np.ndarray:
    """sigma(t) = E sigma(0) E^T, re-symmetrized to kill roundoff drift."""
    return _symmetrize(e @ sigma0 @ e.T)


def marginal_indices(n_modes: int, sites: np.ndarray | list[int]) -> np.ndarray:
    """Covariance row/column indices (q then p) for the given mode subset."""
    sites = np.asarray(sites, dtype=int)
    if sites.size == 0:
        raise GaussianError("subsystem must contain at least one site")
    if sites.size != np.unique(sites).size:
        raise GaussianError(f"subsystem indices must be distinct, got {sites.tolist()}")
    if sites.min() < 0 or sites.max() >= n_modes:
        raise GaussianError(f"subsystem indices {sites.tolist()} out of range for N={n_modes}")
    return np.concatenate((sites, n_modes + sites))


def marginal(sigma: np.ndarray, sites: np.ndarray | list[int]) -> np.ndarray:
    """Reduced covariance of a site subset: the matching sub-block of sigma."""
    idx = marginal_indices(sigma.shape[0] // 2, sites)
    return sigma[np.ix_(idx, idx)]


def mean_energy(sigma: np.ndarray, v: np.ndarray) -> float:
    """<H> = 1/2 (tr[V sigma_qq] + tr[sigma_pp]) for a zero-mean state."""
    n = sigma.shape[0] // 2
    if v.shape != (n, n):
        raise GaussianError(f"potential shape {v.shape} does not match {n} modes")
    return 0.5 * (float(np.sum(v * sigma[:n, :n])) + float(np.trace(sigma[n:, n:])))


def symplectic_eigenvalues(sigma: np.ndarray) -> np.ndarray:
    """Symplectic spectrum of a covariance matrix (ascending, >= 1/2 if physical)."""
    vals = np.linalg.eigvals(_ups_left(np.asarray(sigma, dtype=float)))
    d = np.sort(np.abs(vals.imag))
    return 0.5 * (d[0::2] + d[1::2])


def symplecticity_residual(m: np.ndarray) -> float:
    """max-abs residual of M^T Upsilon M - Upsilon."""
    n = m.shape[0] // 2
    r = m.T @ _ups_left(m)
    r[:n, n:] -= np.eye(n)
    r[n:, :n] += np.eye(n)
    return float(np.max(np.abs(r)))


def is_physical(sigma: np.ndarray, tol: float = 1e-9) -> bool:
    """Symmetric and sigma + i Upsilon/2 >= 0 (symplectic eigenvalues >= 1/2 - tol)."""
    sigma = np.asarray(sigma, dtype=float)
    scale = max(1.0, float(np.max(np.abs(sigma))))
    if float(np.max(np.abs(sigma - sigma.T))) > 1e-12 * scale:
        return False
    return float(symplectic_eigenvalues(sigma).min()) >= 0.5 - tol


def williamson(sigma: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """General Williamson decomposition sigma = S (D + D) S^T of a PD matrix.

    Returns (S, d) with S symplectic and d the ascending symplectic eigenvalues.
    Used for diagnostics and for preparing arbitrary Gaussian states; the fast
    path for F = V + I Hamiltonians is williamson_from_potential.
    """
    sigma = _symmetrize(np.asarray(sigma, dtype=float))
    n = sigma.shape[0] // 2
    w, u = np.linalg.eigh(sigma)
    if w[0] <= 0:
        raise GaussianError(f"covariance not positive definite (min eigenvalue {w[0]:.3e})")
    root = (u * np.sqrt(w)[None, :]) @ u.T
    inv_root = (u / np.sqrt(w)[None, :]) @ u.T
    skew = inv_root @ _ups_left(inv_root)  # sigma^{-1/2} Upsilon sigma^{-1/2}
    skew = 0.5 * (skew - skew.T)
    t, q = sla.schur(skew, output="real")
    # normalize each 2x2 Schur block to [[0, 1/d], [-1/d, 0]] with d > 0
    d = np.empty(n)
    for k in range(n):
        b = t[2 * k, 2 * k + 1]
        if b < 0:
            q[:, [2 * k, 2 * k + 1]] = q[:, [2 * k + 1, 2 * k]]
            b = -b
        d[k] = 1.0 / b
    order = np.argsort(d)
    d = d[order]
    cols = np.empty(2 * n, dtype=int)
    cols[0::2] = 2 * order
    cols[1::2] = 2 * order + 1
    q = q[:, cols]
    lam = np.repeat(d, 2)
    s0 = root @ (q / np.sqrt(lam)[None, :])
    # permute the interleaved (Q1,P1,Q2,P2,...) output columns to q-p ordering
    perm = np.concatenate((np.arange(0, 2 * n, 2), np.arange(1, 2 * n, 2)))
    return s0[:, perm], d


def gaussian_fidelity(sigma1: np.ndarray, sigma2: np.ndarray) -> float:
    """Uhlmann fidelity of two zero-mean Gaussian states from their covariances.

    Returns the squared convention F = (tr sqrt(sqrt(rho1) rho2 sqrt(rho1)))^2,
    the one satisfying F = (1 - D^2/2)^2 with the Bures distance D.  In terms of
    M = det[2 (sqrt(I + (C Upsilon)^{-2} / 4) + I) C] and
    C = -Upsilon (sigma1 + sigma2)^{-1} (Upsilon / 4 + sigma2 Upsilon sigma1),
    this is F = (M / det(sigma1 + sigma2))^{1/2}; the 1/4 power gives the
    amplitude fidelity tr sqrt(...) instead (checked against number-basis
    brute force, e.g. vacuum vs thermal must give 1/(1 + nbar)).

    The determinant M is evaluated from the eigenvalues w of C Upsilon as
    prod_i 2 w_i (sqrt(1 + 1/(4 w_i^2)) + 1), in log space; eigenvalues of the
    square-root argument with tiny negative real part (roundoff near pure
    states) are clamped to zero.  The result is clamped to [0, 1].
    """
    sigma1 = np.asarray(sigma1, dtype=float)
    sigma2 = np.asarray(sigma2, dtype=float)
    if sigma1.shape != sigma2.shape or sigma1.ndim != 2 or sigma1.shape[0] % 2:
        raise GaussianError(f"covariance shapes {sigma1.shape} and {sigma2.shape} incompatible")
    n = sigma1.shape[0] // 2
    if n == 1:
        # closed-form path in extended precision: near-identical cold states
        # sit within ~1e-13 of F = 1, where the generic eigvals path is too
        # noisy for stable temperature argmins
        return float(np.clip(_fidelity_one_mode(sigma1, sigma2), 0.0, 1.0))
    total = _symmetrize(sigma1 + sigma2)
    try:
        cho = sla.cho_factor(total, check_finite=False)
    except np.linalg.LinAlgError as exc:  # cannot happen for physical states
        raise GaussianError("sigma1 + sigma2 is singular") from exc
    b = sigma2 @ _ups_left(sigma1)
    b[:n, n:] += 0.25 * np.eye(n)
    b[n:, :n] -= 0.25 * np.eye(n)
    c = -_ups_left(sla.cho_solve(cho, b, check_finite=False))
    w = np.linalg.eigvals(_ups_right(c))
    if np.any(np.abs(w) < 1e-12):
        raise GaussianError("singular C Upsilon in fidelity evaluation")
    a = 1.0 + 0.25 / (w * w)
    # clamp: eigenvalues indistinguishable from zero (pure-state limit) snap to
    # exactly 0, since sqrt turns an epsilon-sized residual into sqrt(epsilon)
    scale = 1.0 + np.abs(a)
    real_mask = np.abs(a.imag) <= 1e-12 * scale
    a = np.where(real_mask, a.real + 0j, a)
    a = np.where(real_mask & (np.abs(a.real) < 1e-15 * scale), 0j, a)
    a = np.where(real_mask & (a.real < 0) & (a.real > -1e-12 * scale), 0j, a)
    factors = 2.0 * w * (np.sqrt(a) + 1.0)
    log_m_mag = float(np.sum(np.log(np.abs(factors))))
    phase = float(np.sum(np.angle(factors)))
    if abs(np.sin(phase)) > 1e-6:
        raise GaussianError(f"fidelity determinant acquired a complex phase ({phase:.3e})")
    if np.cos(phase) < 0:
        return 0.0
    logdet_total = 2.0 * float(np.sum(np.log(np.diag(cho[0]))))
    log_f = 0.5 * (log_m_mag - logdet_total)
    return float(np.clip(np.exp(log_f), 0.0, 1.0))


def _fidelity_one_mode(sigma1: np.ndarray, sigma2: np.ndarray) -> np.longdouble:
    """Single-mode fidelity in a cancellation-free closed form, in long double.

    For one mode the determinant formula reduces exactly (verified
    symbolically) to F = [2 sqrt(Gamma) + 2 sqrt(P1 P2)] / det(sigma1+sigma2)
    with Gamma = det(Upsilon/4 + sigma2 Upsilon sigma1) and
    P_i = det(sigma_i) - 1/4.  The purity gaps P_i are evaluated from
    entry deviations around the vacuum value 1/2, so near-pure (cold) states
    lose no precision; P_i just below zero from roundoff is clamped to 0.
    """
    ld = np.longdouble
    a1, b1, c1 = ld(sigma1[0, 0]), ld(sigma1[1, 1]), ld(sigma1[0, 1])
    a2, b2, c2 = ld(sigma2[0, 0]), ld(sigma2[1, 1]), ld(sigma2[0, 1])
    det_a = (a1 + a2) * (b1 + b2) - (c1 + c2) * (c1 + c2)
    if det_a <= 0:
        raise GaussianError("sigma1 + sigma2 is singular")
    half = ld(0.5)
    ea1, eb1 = a1 - half, b1 - half
    ea2, eb2 = a2 - half, b2 - half
    p1 = ea1 * eb1 + half * (ea1 + eb1) - c1 * c1
    p2 = ea2 * eb2 + half * (ea2 + eb2) - c2 * c2
    p1 = max(p1, ld(0.0))
    p2 = max(p2, ld(0.0))
    quarter = ld(0.25)
    g00 = a2 * c1 - c2 * a1
    g01 = a2 * b1 - c2 * c1 + quarter
    g10 = c2 * c1 - b2 * a1 - quarter
    g11 = c2 * b1 - b2 * c1
    gamma = g00 * g11 - g01 * g10
    gamma = max(gamma, ld(0.0))
    return (2.0 * np.sqrt(gamma) + 2.0 * np.sqrt(p1 * p2)) / det_a


def _distance_from_fidelity_ld(f_ld) -> float:
    f_ld = min(max(f_ld, np.longdouble(0.0)), np.longdouble(1.0))
    return float(np.sqrt(max(np.longdouble(0.0), 2.0 - 2.0 * np.sqrt(f_ld))))


def bures_distance(sigma1: np.ndarray, sigma2: np.ndarray) -> float:
    """Bures distance D = sqrt(2 - 2 sqrt(F)), in [0, sqrt(2)]."""
    sigma1 = np.asarray(sigma1, dtype=float)
    sigma2 = np.asarray(sigma2, dtype=float)
    if sigma1.shape == (2, 2) and sigma2.shape == (2, 2):
        return _distance_from_fidelity_ld(_fidelity_one_mode(sigma1, sigma2))
    f = gaussian_fidelity(sigma1, sigma2)
    return float(np.sqrt(max(0.0, 2.0 - 2.0 * np.sqrt(f))))


def fidelity_to_diagonal_thermal(
    sigma_normal: np.ndarray, r: np.ndarray, offblock_tol: float = 1e-5
):
    """Fidelity of a normal-coordinate state with the diagonal state diag(r, r).

    When sigma_normal couples different modes only below offblock_tol, the
    fidelity factorizes over modes up to O(offblock^2) and each single-mode
    factor is evaluated by the extended-precision closed form.  This keeps
    near-pure (cold) modes from injecting sqrt(eps)-level noise, which the
    generic eigenvalue path cannot avoid.  Returns the fidelity as a long
    double, or None when mode-mode couplings are too large to factorize
    (callers then fall back to gaussian_fidelity).
    """
    n = sigma_normal.shape[0] // 2
    mask = np.ones((2 * n, 2 * n), dtype=bool)
    idx = np.arange(n)
    for rows, cols in (
        (idx, idx),
        (idx, n + idx),
        (n + idx, idx),
        (n + idx, n + idx),
    ):
        mask[rows, cols] = False
    if float(np.max(np.abs(sigma_normal[mask]))) > offblock_tol:
        return None
    log_f = np.longdouble(0.0)
    for j in range(n):
        block = np.array(
            [
                [sigma_normal[j, j], sigma_normal[j, n + j]],
                [sigma_normal[n + j, j], sigma_normal[n + j, n + j]],
            ]
        )
        f_j = _fidelity_one_mode(block, np.diag([r[j], r[j]]).astype(float))
        if f_j <= 0.0:
            return np.longdouble(0.0)
        log_f += np.log(f_j)
    return np.exp(log_f)


def fidelity_from_distance(d: float) -> float:
    """Inverse of the Bures map: F = (1 - D^2 / 2)^2."""
    return (1.0 - 0.5 * d * d) ** 2


class CovarianceTrajectory:
    """Exact covariance evolution in normal coordinates of the total system.

    Holds Sigma_0 = S^{-1} sigma(0) S^{-T} once; each sample time only needs
    the O(N^2) block rotation M(t) = R(t) Sigma_0 R(t)^T, from which full
    covariances, marginals, and quadratic-form traces are read out.  Instances
    are immutable after construction and safe to share across threads.
    """

    def __init__(self, basis: NormalModeBasis, sigma0: np.ndarray):
        if sigma0.shape != basis.s.shape:
            raise GaussianError(
                f"covariance shape {sigma0.shape} does not match basis {basis.s.shape}"
            )
        self.basis = basis
        self.sigma0 = np.asarray(sigma0, dtype=float)
        self._sigma_normal = basis.to_normal(self.sigma0)

    @property
    def n_modes(self) -> int:
        return self.basis.n_modes

    def mode_covariance(self, t: float) -> np.ndarray:
        """Normal-coordinate covariance M(t) = R(t) Sigma_0 R(t)^T."""
        rotated = _mode_rotation_apply(self.basis.omega, t, self._sigma_normal)
        return _symmetrize(_mode_rotation_apply(self.basis.omega, t, rotated.T))

    def state_at(self, t: float) -> "SampledState":
        """One-time-sample view; reuses M(t) across marginals and trace forms."""
        return SampledState(self.basis, self.mode_covariance(t))

    def covariance(self, t: float) -> np.ndarray:
        """Full q-p covariance sigma(t); O(N^3), prefer marginals when possible."""
        return self.basis.from_normal(self.mode_covariance(t))

    def marginal(self, t: float, sites: np.ndarray | list[int]) -> np.ndarray:
        """Reduced covariance of a site subset at time t without forming sigma(t)."""
        return self.state_at(t).marginal(sites)

    def quadratic_form_trace(self, w_normal: np.ndarray, t: float) -> float:
        """tr[G sigma(t)] for a quadratic form G, given w_normal = S^T G S."""
        return float(np.sum(w_normal * self.mode_covariance(t)))

    def to_normal_form(self, g: np.ndarray) -> np.ndarray:
        """Precompute S^T G S for repeated quadratic_form_trace calls."""
        return self.basis.s.T @ g @ self.basis.s


class SampledState:
    """Covariance of one trajectory sample, held in normal coordinates."""

    def __init__(self, basis: NormalModeBasis, mode_covariance: np.ndarray):
        self.basis = basis
        self.m = mode_covariance

    def marginal(self, sites: np.ndarray | list[int]) -> np.ndarray:
        idx = marginal_indices(self.basis.n_modes, sites)
        rows = self.basis.s[idx, :]
        return _symmetrize(rows @ self.m @ rows.T)

    def trace_form(self, w_normal: np.ndarray) -> float:
        """tr[G sigma] given the precomputed normal form S^T G S."""
        return float(np.sum(w_normal * self.m))

    def covariance(self) -> np.ndarray:
        return self.basis.from_normal(self.m)
