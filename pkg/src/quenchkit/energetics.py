"""Energy bookkeeping, heat flows, equilibrium-temperature prediction, and the
rate-equation (two-temperature-model) diagnostics.

Convention: the interaction energy E_int = tr[H_int rho] belongs to neither
lattice; it is never folded into E_A or E_B (the weak-coupling equilibrium
predictor relies on E_int staying small, which the simulations report rather
than assume).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .gaussian import GaussianError
from .thermometry import thermal_energy


@dataclass(frozen=True)
class EnergyLedger:
    """Per-sample energy split and finite-difference flow rates."""

    times: np.ndarray
    e_a: np.ndarray
    e_b: np.ndarray
    e_int: np.ndarray
    qdot_a: np.ndarray
    qdot_b: np.ndarray
    edot_int: np.ndarray

    @property
    def e_total(self) -> np.ndarray:
        return self.e_a + self.e_b + self.e_int


@dataclass(frozen=True)
class TTMReport:
    """Reverse-engineered rate-equation diagnostics for temperature trajectories.

    monotone   : |T_A - T_B| non-increasing (within the noise floor) -- the
                 necessary and sufficient condition for a rate-equation ansatz
    j          : -d ln|T_A - T_B| / dt (nan where the gap crosses zero)
    k          : thermal conductance j / (1/C_A + 1/C_B)
    degenerate : T_A = T_B identically, nothing to reverse-engineer
    """

    monotone: bool
    degenerate: bool
    j: np.ndarray
    k: np.ndarray
    negative_fraction: float


def energy_split(
    sigma_ab: np.ndarray, v_a: np.ndarray, v_b: np.ndarray, v_int: np.ndarray
) -> tuple[float, float, float]:
    """(E_A, E_B, E_int) of a joint state; sums exactly to the total mean energy.

    E_X = 1/2 (tr[V_X sigma_qq,X] + tr[sigma_pp,X]); the interaction term
    appears once, E_int = sum(V_int * sigma_qq,cross), because the two mirror
    blocks of 1/2 x^T V x cancel the 1/2.
    """
    na, nb = v_a.shape[0], v_b.shape[0]
    n = na + nb
    if sigma_ab.shape != (2 * n, 2 * n):
        raise GaussianError(f"sigma shape {sigma_ab.shape} does not match {n} sites")
    qq = sigma_ab[:n, :n]
    pp = sigma_ab[n:, n:]
    e_a = 0.5 * (float(np.sum(v_a * qq[:na, :na])) + float(np.trace(pp[:na, :na])))
    e_b = 0.5 * (float(np.sum(v_b * qq[na:, na:])) + float(np.trace(pp[na:, na:])))
    e_int = float(np.sum(v_int * qq[:na, na:]))
    return e_a, e_b, e_int


def flows(times: np.ndarray, energies: np.ndarray) -> np.ndarray:
    """Centered finite-difference rates (one-sided at the ends); uniform grid."""
    times = np.asarray(times, dtype=float)
    energies = np.asarray(energies, dtype=float)
    if times.size < 3:
        raise GaussianError("need at least 3 samples to differentiate")
    steps = np.diff(times)
    if np.max(np.abs(steps - steps[0])) > 1e-9 * max(abs(steps[0]), 1e-300):
        raise GaussianError("flows expects a uniform time grid")
    return np.gradient(energies, times)


def build_ledger(
    times: np.ndarray, e_a: np.ndarray, e_b: np.ndarray, e_int: np.ndarray
) -> EnergyLedger:
    """Assemble an EnergyLedger with finite-difference rates."""
    times = np.asarray(times, dtype=float)
    return EnergyLedger(
        times=times,
        e_a=np.asarray(e_a, dtype=float),
        e_b=np.asarray(e_b, dtype=float),
        e_int=np.asarray(e_int, dtype=float),
        qdot_a=flows(times, e_a),
        qdot_b=flows(times, e_b),
        edot_int=flows(times, e_int),
    )


def predict_teq(
    omega_a: np.ndarray,
    omega_b: np.ndarray,
    t_a: float,
    t_b: float,
    rel_tol: float = 1e-10,
    max_iter: int = 400,
) -> float:
    """Weak-coupling equilibrium temperature from energy conservation.

    Solves <H_A>_T + <H_B>_T = <H_A>_{T_A} + <H_B>_{T_B}; the left side is
    strictly increasing in T, so bisection on log T between the two initial
    temperatures converges to the unique root.
    """
    if t_a < 0 or t_b < 0:
        raise GaussianError("initial temperatures must be >= 0")
    if t_a == t_b:
        return float(t_a)
    target = thermal_energy(omega_a, t_a) + thermal_energy(omega_b, t_b)

    def total(temp: float) -> float:
        return thermal_energy(omega_a, temp) + thermal_energy(omega_b, temp)

    t_lo, t_hi = min(t_a, t_b), max(t_a, t_b)
    if t_lo == 0.0:
        t_lo = min(1e-12 * t_hi, t_hi / 2)
        while total(t_lo) > target:
            t_lo /= 4.0
    lo, hi = math.log(t_lo), math.log(t_hi)
    t_mid = math.exp(0.5 * (lo + hi))
    for _ in range(max_iter):
        t_mid = math.exp(0.5 * (lo + hi))
        e_mid = total(t_mid)
        if abs(e_mid - target) <= rel_tol * abs(target):
            return t_mid
        if e_mid < target:
            lo = math.log(t_mid)
        else:
            hi = math.log(t_mid)
    return t_mid


def ttm_consistency(
    times: np.ndarray,
    t_a: np.ndarray,
    t_b: np.ndarray,
    capacity_a,
    capacity_b,
    noise_floor: float = 1e-9,
) -> TTMReport:
    """Test sampled temperature trajectories against the rate-equation ansatz.

    The ansatz dT_X/dt = -(T_X - T_Y) k / C_X holds iff |T_A - T_B| decreases
    monotonically; when it does, J(t) = -d ln|T_A - T_B|/dt and
    k(t) = J / (1/C_A + 1/C_B) reconstruct the rate coefficients.  When it
    does not, J and k are still emitted with their negative segments counted
    in negative_fraction, falsifying the ansatz.
    """
    times = np.asarray(times, dtype=float)
    t_a = np.asarray(t_a, dtype=float)
    t_b = np.asarray(t_b, dtype=float)
    delta = t_a - t_b
    scale = max(float(np.max(np.abs(delta))), 1e-300)
    if scale <= noise_floor:
        nan = np.full_like(times, np.nan)
        return TTMReport(monotone=True, degenerate=True, j=nan, k=nan, negative_fraction=0.0)
    gap = np.abs(delta)
    monotone = bool(np.all(np.diff(gap) <= noise_floor * scale))
    with np.errstate(divide="ignore", invalid="ignore"):
        log_gap = np.where(gap > 0, np.log(np.maximum(gap, 1e-300)), np.nan)
        j = -np.gradient(log_gap, times)
    inv_cap = np.array([1.0 / capacity_a(ta) + 1.0 / capacity_b(tb) for ta, tb in zip(t_a, t_b)])
    k = j / inv_cap
    finite = np.isfinite(j)
    negative_fraction = float(np.mean(j[finite] < 0)) if finite.any() else 1.0
    return TTMReport(
        monotone=monotone, degenerate=False, j=j, k=k, negative_fraction=negative_fraction
    )
