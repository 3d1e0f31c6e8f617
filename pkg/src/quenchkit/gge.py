"""Generalized Gibbs ensemble of the post-quench lattice pair.

The conserved charges of the quadratic total Hamiltonian are the normal-mode
energies h_k = (Omega_k/2)(Q_k^2 + P_k^2).  When the frequency spectrum is
degenerate, pairs with Omega_k = Omega_j contribute extra conserved charges
I_kj = Omega_k (Q_k Q_j + P_k P_j); instead of adding them to the ensemble we
re-mix the normal modes inside each degenerate block so that every <I_kj>
vanishes on the initial state, after which the product form of the ensemble
is exact again.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .gaussian import GaussianError, NormalModeBasis, coth

DEGENERACY_TOL = 1e-8
BETA_CAP_SCALE = 1e12


@dataclass(frozen=True)
class GGESpec:
    """Stationary generalized-Gibbs description of one quench.

    basis            : normal-mode basis (rotated inside degenerate blocks when needed)
    beta             : generalized inverse temperatures, one per mode
    mode_energies    : conserved charge expectations <h_k> on the initial state
    charge_residuals : max |<I_kj>| over degenerate pairs after rotation
    capped           : modes whose <h_k> sat at the vacuum floor (beta capped, not inf)
    degeneracy_tolerance / partition : how modes were grouped
    """

    basis: NormalModeBasis
    beta: np.ndarray
    mode_energies: np.ndarray
    charge_residuals: float
    degeneracy_tolerance: float
    partition: list = field(default_factory=list)
    capped: np.ndarray | None = None

    @property
    def degenerate(self) -> bool:
        return any(len(block) > 1 for block in self.partition)


def detect_degeneracies(omega: np.ndarray, tol: float = DEGENERACY_TOL) -> list[list[int]]:
    """Group indices of (near-)equal frequencies: consecutive gaps <= tol * max(Omega).

    Transitive closure along the sorted list, so a chain of small gaps forms
    one block even if its endpoints differ by more than the tolerance.
    """
    omega = np.asarray(omega, dtype=float)
    if np.any(np.diff(omega) < 0):
        raise GaussianError("omega must be ascending")
    gap = tol * float(omega.max())
    blocks: list[list[int]] = [[0]]
    for k in range(1, omega.size):
        if omega[k] - omega[k - 1] <= gap:
            blocks[-1].append(k)
        else:
            blocks.append([k])
    return blocks


def _normal_blocks(sigma_normal: np.ndarray, idx: np.ndarray):
    n = sigma_normal.shape[0] // 2
    qq = sigma_normal[np.ix_(idx, idx)]
    pp = sigma_normal[np.ix_(n + idx, n + idx)]
    qp = sigma_normal[np.ix_(idx, n + idx)]
    return qq, pp, qp


def _occupation_matrix(sigma_normal: np.ndarray, idx: np.ndarray) -> np.ndarray:
    """Hermitian C_kj = 1/2 <(Q_k - iP_k)(Q_j + iP_j)> - delta_kj/2 on block idx."""
    qq, pp, qp = _normal_blocks(sigma_normal, idx)
    c = 0.5 * (qq + pp + 1j * (qp - qp.T)) - 0.5 * np.eye(idx.size)
    herm_err = float(np.max(np.abs(c - c.conj().T)))
    if herm_err > 1e-9 * max(1.0, float(np.max(np.abs(c)))):
        raise GaussianError(f"occupation matrix not Hermitian (residual {herm_err:.2e})")
    return 0.5 * (c + c.conj().T)


def pair_charge_residual(
    basis: NormalModeBasis, sigma0: np.ndarray, partition: list | None = None
) -> float:
    """max |<I_kj>| = |Omega (Sigma_QQ + Sigma_PP)[k,j]| over degenerate pairs."""
    if partition is None:
        partition = detect_degeneracies(basis.omega)
    sigma_normal = basis.to_normal(sigma0)
    worst = 0.0
    for block in partition:
        if len(block) < 2:
            continue
        idx = np.asarray(block, dtype=int)
        qq, pp, _ = _normal_blocks(sigma_normal, idx)
        m = basis.omega[idx[0]] * (qq + pp)
        off = m - np.diag(np.diag(m))
        worst = max(worst, float(np.max(np.abs(off))))
    return worst


def rotate_degenerate_modes(
    basis: NormalModeBasis, sigma0: np.ndarray, tol: float = DEGENERACY_TOL
) -> tuple[NormalModeBasis, list]:
    """Re-mix each degenerate block so all pair charges vanish on sigma0.

    Diagonalizing the block's Hermitian occupation matrix C gives a mode
    unitary W; its real and imaginary parts act jointly on (Q, P) as an
    orthogonal-symplectic rotation, which leaves the Hamiltonian's normal form
    untouched (frequencies are equal inside a block) and zeroes both the
    symmetric pair charges Omega(Q_k Q_j + P_k P_j) and their antisymmetric
    partners Omega(Q_k P_j - Q_j P_k).
    """
    partition = detect_degeneracies(basis.omega, tol)
    if all(len(block) == 1 for block in partition):
        return basis, partition
    n = basis.n_modes
    sigma_normal = basis.to_normal(sigma0)
    k_full = np.eye(2 * n)
    touched = False
    for block in partition:
        if len(block) < 2:
            continue
        idx = np.asarray(block, dtype=int)
        c = _occupation_matrix(sigma_normal, idx)
        off = c - np.diag(np.diag(c))
        if float(np.max(np.abs(off))) <= 1e-14 * max(1.0, float(np.max(np.abs(c)))):
            continue  # block already charge-diagonal: keep its modes untouched
        _, u = np.linalg.eigh(c)
        w = u.T  # new modes a~ = W a diagonalize the occupation matrix
        re, im = np.real(w), np.imag(w)
        k_full[np.ix_(idx, idx)] = re
        k_full[np.ix_(idx, n + idx)] = -im
        k_full[np.ix_(n + idx, idx)] = im
        k_full[np.ix_(n + idx, n + idx)] = re
        touched = True
    if not touched:
        return basis, partition
    return basis.with_s(basis.s @ k_full.T), partition


def mode_energies(basis: NormalModeBasis, sigma0: np.ndarray) -> np.ndarray:
    """Conserved charge expectations <h_k> = (Omega_k/2)(Sigma_QQ + Sigma_PP)[k,k]."""
    sigma_normal = basis.to_normal(sigma0)
    n = basis.n_modes
    diag_q = np.diag(sigma_normal[:n, :n])
    diag_p = np.diag(sigma_normal[n:, n:])
    return 0.5 * basis.omega * (diag_q + diag_p)


def generalized_temperatures(
    basis: NormalModeBasis, sigma0: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """beta_k = (2/Omega_k) artanh(Omega_k / 2<h_k>) from initial charge expectations.

    Returns (beta, h, capped).  Vacuum-saturated modes (<h_k> at Omega_k/2
    within 1e-12) get the documented cap beta = 1e12/Omega_k instead of +inf
    so downstream coth evaluations stay finite; they are flagged in capped.
    """
    h = mode_energies(basis, sigma0)
    omega = basis.omega
    floor = 0.5 * omega
    if np.any(h < floor * (1.0 - 1e-9)):
        k = int(np.argmin(h - floor))
        raise GaussianError(
            f"mode {k}: <h> = {h[k]:.6e} below vacuum floor {floor[k]:.6e} (unphysical input)"
        )
    capped = h <= floor * (1.0 + 1e-12)
    beta = np.empty_like(omega)
    beta[capped] = BETA_CAP_SCALE / omega[capped]
    safe = ~capped
    beta[safe] = (2.0 / omega[safe]) * np.arctanh(
        np.clip(omega[safe] / (2.0 * h[safe]), 0.0, 1.0 - 1e-300)
    )
    return beta, h, capped


def gge_covariance(spec: GGESpec) -> np.ndarray:
    """Stationary covariance of the generalized Gibbs ensemble."""
    r = 0.5 * coth(spec.beta * spec.basis.omega / 2.0)
    rr = np.concatenate((r, r))
    s = spec.basis.s
    m = (s * rr[None, :]) @ s.T
    return 0.5 * (m + m.T)


def build_gge(
    basis: NormalModeBasis, sigma0: np.ndarray, tol: float = DEGENERACY_TOL
) -> GGESpec:
    """Detect degeneracies, rotate blocks if needed, and fix the beta_k."""
    rotated, partition = rotate_degenerate_modes(basis, sigma0, tol)
    beta, h, capped = generalized_temperatures(rotated, sigma0)
    residual = pair_charge_residual(rotated, sigma0, partition)
    return GGESpec(
        basis=rotated,
        beta=beta,
        mode_energies=h,
        charge_residuals=residual,
        degeneracy_tolerance=tol,
        partition=partition,
        capped=capped,
    )
