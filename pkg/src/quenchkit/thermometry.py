"""Mean-force Gibbs thermometry for subsystems of harmonic lattices.

The effective local temperature of a subsystem state rho_s is the T minimizing
the Bures distance to the mean-force state tau_s^MF(T), i.e. the marginal of
the lattice's global Gibbs state at T.  The search runs over log T with a
coarse pre-scan (guarding against non-unimodal profiles) followed by a
golden-section refinement with a fixed, deterministic iteration schedule.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .gaussian import (
    GaussianError,
    NormalModeBasis,
    _distance_from_fidelity_ld,
    bures_distance,
    coth,
    fidelity_from_distance,
    fidelity_to_diagonal_thermal,
    gaussian_fidelity,
    marginal_indices,
    mean_energy,
    thermal_occupations,
    williamson_from_potential,
)

PRESCAN_POINTS = 32
LOG_T_TOL = 1e-6
_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class ThermometryReading:
    """One temperature estimate: argmin T, its Bures distance and fidelity.

    f_max always equals (1 - d_min^2/2)^2; pinned marks optima stuck at a
    bracket edge (the caller should widen the bracket and retry).
    """

    t_eff: float
    d_min: float
    f_max: float
    iterations: int
    bracket: tuple[float, float]
    pinned: bool = False


def _as_basis(v_or_basis: np.ndarray | NormalModeBasis) -> NormalModeBasis:
    if isinstance(v_or_basis, NormalModeBasis):
        return v_or_basis
    return williamson_from_potential(np.asarray(v_or_basis, dtype=float))


class MeanForceProbe:
    """Precomputed mean-force marginal tau_s^MF(T) for one lattice and subsystem.

    Only the subsystem rows of the symplectic transform are kept, so one
    temperature evaluation costs O(|s|^2 N) instead of O(N^3).
    """

    def __init__(self, v_or_basis: np.ndarray | NormalModeBasis, sites):
        basis = _as_basis(v_or_basis)
        self.basis = basis
        self.sites = np.asarray(sites, dtype=int)
        idx = marginal_indices(basis.n_modes, self.sites)
        self._rows = basis.s[idx, :]

    def covariance(self, temperature: float) -> np.ndarray:
        r = thermal_occupations(self.basis.omega, temperature)
        rr = np.concatenate((r, r))
        m = (self._rows * rr[None, :]) @ self._rows.T
        return 0.5 * (m + m.T)


def mean_force_covariance(
    v_or_basis: np.ndarray | NormalModeBasis, temperature: float, sites
) -> np.ndarray:
    """Covariance of the mean-force state: global Gibbs at T, reduced to sites."""
    return MeanForceProbe(v_or_basis, sites).covariance(temperature)


def _golden_minimize(objective, log_lo: float, log_hi: float, log_tol: float):
    """Golden-section minimum of objective(exp(x)) on [log_lo, log_hi].

    Fixed iteration count from the interval/tolerance ratio; deterministic.
    Returns (x_min, f_min, n_evals).
    """
    a, b = log_lo, log_hi
    evals = 0
    if b - a <= log_tol:
        x = 0.5 * (a + b)
        return x, objective(math.exp(x)), 1
    n_iter = max(0, math.ceil(math.log(log_tol / (b - a)) / math.log(_INVPHI)))
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc = objective(math.exp(c))
    fd = objective(math.exp(d))
    evals += 2
    for _ in range(n_iter):
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - _INVPHI * (b - a)
            fc = objective(math.exp(c))
        else:
            a, c, fc = c, d, fd
            d = a + _INVPHI * (b - a)
            fd = objective(math.exp(d))
        evals += 1
        if b - a <= log_tol:
            break
    if fc <= fd:
        return c, fc, evals
    return d, fd, evals


def _minimize_over_log_t(objective, bracket: tuple[float, float], prescan: int, log_tol: float):
    """Pre-scan + golden section over log T.  Returns (T, value, evals, pinned)."""
    t_lo, t_hi = bracket
    if not (0.0 < t_lo < t_hi):
        raise GaussianError(f"bracket must satisfy 0 < T_lo < T_hi, got {bracket}")
    xs = np.linspace(math.log(t_lo), math.log(t_hi), prescan)
    vals = np.array([objective(math.exp(x)) for x in xs])
    k = int(np.argmin(vals))
    pinned = k in (0, prescan - 1)
    lo = xs[max(k - 1, 0)]
    hi = xs[min(k + 1, prescan - 1)]
    x_min, f_min, extra = _golden_minimize(objective, lo, hi, log_tol)
    if vals[k] < f_min:
        x_min, f_min = xs[k], vals[k]
    return math.exp(x_min), f_min, prescan + extra, pinned


def estimate_t_eff(
    sigma_s: np.ndarray,
    v_or_basis: np.ndarray | NormalModeBasis,
    sites,
    bracket: tuple[float, float],
    prescan: int = PRESCAN_POINTS,
    log_tol: float = LOG_T_TOL,
) -> ThermometryReading:
    """Effective local temperature of sigma_s against mean-force states of the lattice."""
    probe = MeanForceProbe(v_or_basis, sites)
    if sigma_s.shape != (2 * probe.sites.size, 2 * probe.sites.size):
        raise GaussianError(
            f"sigma_s shape {sigma_s.shape} does not match subsystem of {probe.sites.size} sites"
        )

    def objective(temperature: float) -> float:
        return bures_distance(sigma_s, probe.covariance(temperature))

    t_opt, _, evals, pinned = _minimize_over_log_t(objective, bracket, prescan, log_tol)
    f = gaussian_fidelity(sigma_s, probe.covariance(t_opt))
    d_min = math.sqrt(max(0.0, 2.0 - 2.0 * math.sqrt(f)))
    return ThermometryReading(
        t_eff=t_opt,
        d_min=d_min,
        f_max=fidelity_from_distance(d_min),
        iterations=evals,
        bracket=(float(bracket[0]), float(bracket[1])),
        pinned=pinned,
    )


def estimate_t_eff_autowiden(
    sigma_s: np.ndarray,
    v_or_basis: np.ndarray | NormalModeBasis,
    sites,
    bracket: tuple[float, float],
    max_widenings: int = 3,
    widen_factor: float = 10.0,
    **kwargs,
) -> ThermometryReading:
    """estimate_t_eff that widens a pinned bracket (x10 per attempt) and retries."""
    lo, hi = bracket
    reading = estimate_t_eff(sigma_s, v_or_basis, sites, (lo, hi), **kwargs)
    for _ in range(max_widenings):
        if not reading.pinned:
            return reading
        lo, hi = lo / widen_factor, hi * widen_factor
        reading = estimate_t_eff(sigma_s, v_or_basis, sites, (lo, hi), **kwargs)
    return reading


def global_thermality(
    sigma_x: np.ndarray,
    v_or_basis: np.ndarray | NormalModeBasis,
    bracket: tuple[float, float],
    prescan: int = PRESCAN_POINTS,
    log_tol: float = LOG_T_TOL,
) -> ThermometryReading:
    """Best fidelity of sigma_x with any global Gibbs state of its lattice.

    Works in the lattice's normal-mode basis, where every candidate Gibbs
    state is exactly diagonal (fidelity is invariant under the common
    symplectic rotation): states with negligible mode-mode correlations then
    factorize into extended-precision single-mode fidelities, which keeps the
    reading accurate to ~1e-12 even when every mode is nearly pure (cold
    lattices), where the generic evaluator's noise floor is ~1e-5.
    """
    basis = _as_basis(v_or_basis)
    n = basis.n_modes
    if sigma_x.shape != (2 * n, 2 * n):
        raise GaussianError(f"sigma_x shape {sigma_x.shape} does not match lattice of {n} sites")
    sigma_normal = basis.to_normal(sigma_x)

    def fidelity_at(temperature: float):
        r = thermal_occupations(basis.omega, temperature)
        f = fidelity_to_diagonal_thermal(sigma_normal, r)
        if f is None:
            f = np.longdouble(gaussian_fidelity(sigma_normal, np.diag(np.concatenate((r, r)))))
        return f

    def objective(temperature: float) -> float:
        return _distance_from_fidelity_ld(fidelity_at(temperature))

    t_opt, _, evals, pinned = _minimize_over_log_t(objective, bracket, prescan, log_tol)
    d_min = _distance_from_fidelity_ld(fidelity_at(t_opt))
    return ThermometryReading(
        t_eff=t_opt,
        d_min=d_min,
        f_max=fidelity_from_distance(d_min),
        iterations=evals,
        bracket=(float(bracket[0]), float(bracket[1])),
        pinned=pinned,
    )


def thermal_energy(omega: np.ndarray, temperature: float) -> float:
    """Mode-sum mean energy sum_j (Omega_j/2) coth(Omega_j/2T); zero point at T=0."""
    omega = np.asarray(omega, dtype=float)
    if temperature < 0:
        raise GaussianError(f"temperature must be >= 0, got {temperature}")
    if temperature == 0.0:
        return float(0.5 * omega.sum())
    return float(np.sum(0.5 * omega * coth(omega / (2.0 * temperature))))


def canonical_t_eff_from_energy(
    energy: float,
    omega: np.ndarray,
    rel_tol: float = 1e-10,
    max_iter: int = 400,
) -> float:
    """Temperature whose Gibbs state has the given mean energy (log-T bisection).

    The mode-sum energy is strictly increasing in T, so the root is unique.
    Energy exactly at the zero point maps to T = 0; below it is unphysical.
    """
    omega = np.asarray(omega, dtype=float)
    e0 = float(0.5 * omega.sum())
    if energy < e0 * (1.0 - 1e-12):
        raise GaussianError(f"mean energy {energy} below zero-point energy {e0}")
    if energy <= e0 * (1.0 + 1e-12):
        return 0.0
    # bracket the root in log T
    t_hi = max(energy / omega.size, float(omega.max()))
    while thermal_energy(omega, t_hi) < energy:
        t_hi *= 4.0
    t_lo = t_hi
    while thermal_energy(omega, t_lo) > energy:
        t_lo /= 4.0
    lo, hi = math.log(t_lo), math.log(t_hi)
    t_mid = math.exp(0.5 * (lo + hi))
    for _ in range(max_iter):
        t_mid = math.exp(0.5 * (lo + hi))
        e_mid = thermal_energy(omega, t_mid)
        if abs(e_mid - energy) <= rel_tol * abs(energy):
            return t_mid
        if e_mid < energy:
            lo = math.log(t_mid)
        else:
            hi = math.log(t_mid)
    return t_mid


def canonical_t_eff(sigma_x: np.ndarray, v_x: np.ndarray, rel_tol: float = 1e-10) -> float:
    """Effective canonical temperature: Gibbs state matching the state's mean energy."""
    v = np.asarray(v_x, dtype=float)
    energy = mean_energy(sigma_x, v)
    return canonical_t_eff_from_energy(energy, _as_basis(v).omega, rel_tol=rel_tol)


def heat_capacity(omega_or_basis, temperature: float) -> float:
    """C(T) = sum_j (Omega_j/2T)^2 / sinh^2(Omega_j/2T), with C(0) = 0."""
    omega = omega_or_basis.omega if isinstance(omega_or_basis, NormalModeBasis) else np.asarray(omega_or_basis, dtype=float)
    if temperature < 0:
        raise GaussianError(f"temperature must be >= 0, got {temperature}")
    if temperature == 0.0:
        return 0.0
    x = omega / (2.0 * temperature)
    with np.errstate(over="ignore"):
        ratio = x / np.sinh(x)  # -> 0 for huge x (sinh overflows to inf)
    return float(np.sum(ratio * ratio))


def sliding_windows(n_sites: int, size: int) -> list[np.ndarray]:
    """All contiguous windows of the given size: [0..size-1], [1..size], ..."""
    if not 1 <= size <= n_sites:
        raise GaussianError(f"window size {size} invalid for {n_sites} sites")
    return [np.arange(start, start + size) for start in range(n_sites - size + 1)]


def centered_window(n_sites: int, size: int, center_offset: int = 0) -> np.ndarray:
    """Contiguous window of the given size centered in a chain of n_sites."""
    if not 1 <= size <= n_sites:
        raise GaussianError(f"window size {size} invalid for {n_sites} sites")
    start = (n_sites - size) // 2 + center_offset
    start = min(max(start, 0), n_sites - size)
    return np.arange(start, start + size)


def profile_scan(
    sigma_x: np.ndarray,
    v_or_basis: np.ndarray | NormalModeBasis,
    subsystems: list,
    bracket: tuple[float, float],
    **kwargs,
) -> list[ThermometryReading]:
    """One thermometry reading per subsystem of the same lattice state."""
    basis = _as_basis(v_or_basis)
    n = basis.n_modes
    if sigma_x.shape != (2 * n, 2 * n):
        raise GaussianError(f"sigma_x shape {sigma_x.shape} does not match lattice of {n} sites")
    readings = []
    for sites in subsystems:
        idx = marginal_indices(n, sites)
        sigma_s = sigma_x[np.ix_(idx, idx)]
        readings.append(estimate_t_eff_autowiden(sigma_s, basis, sites, bracket, **kwargs))
    return readings
