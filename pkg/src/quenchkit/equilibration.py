"""Distance-to-GGE trajectories and equilibration-window detection."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .gaussian import CovarianceTrajectory, GaussianError, bures_distance, marginal


@dataclass(frozen=True)
class EquilibrationReport:
    """Equilibration window of one subsystem's distance-to-equilibrium trace.

    t_eq  : start of the first stretch of >= sustain_window samples with D <= eps
            (None when the trace never settles)
    t_rec : start of the first later stretch of >= sustain_window samples with
            D > eps (None when no sustained departure occurs on the grid)
    window_fraction : fraction of all samples inside the eps-band
    """

    times: np.ndarray
    distances: np.ndarray
    epsilon: float
    sustain_window: int
    t_eq: float | None
    t_rec: float | None
    window_fraction: float


def distance_trajectory(
    trajectory: CovarianceTrajectory,
    gge_sigma: np.ndarray,
    sites,
    times: np.ndarray,
) -> np.ndarray:
    """D[rho_s(t), rho_s^GGE] for each sample time."""
    times = np.asarray(times, dtype=float)
    if np.any(np.diff(times) < 0):
        raise GaussianError("times must be ascending")
    gge_marg = marginal(gge_sigma, sites)
    return np.array([bures_distance(trajectory.marginal(t, sites), gge_marg) for t in times])


def _first_run_start(mask: np.ndarray, run_length: int, start: int = 0) -> int | None:
    """Index of the first run of >= run_length consecutive True values."""
    count = 0
    for i in range(start, mask.size):
        count = count + 1 if mask[i] else 0
        if count >= run_length:
            return i - run_length + 1
    return None


def detect_equilibration(
    distances: np.ndarray,
    times: np.ndarray,
    epsilon: float,
    sustain_window: int = 16,
) -> EquilibrationReport:
    """Locate the equilibration window [t_eq, t_rec] of a distance trace.

    A crossing counts only when it persists for sustain_window consecutive
    samples, so oscillatory transients that dip below (or spike above) epsilon
    briefly do not trigger entry or recurrence.
    """
    distances = np.asarray(distances, dtype=float)
    times = np.asarray(times, dtype=float)
    if distances.shape != times.shape:
        raise GaussianError("distances and times must have equal length")
    if epsilon <= 0:
        raise GaussianError(f"epsilon must be positive, got {epsilon}")
    if sustain_window < 1:
        raise GaussianError(f"sustain_window must be >= 1, got {sustain_window}")
    inside = distances <= epsilon
    window_fraction = float(np.mean(inside)) if distances.size else 0.0
    eq_idx = _first_run_start(inside, sustain_window)
    if eq_idx is None:
        return EquilibrationReport(
            times, distances, epsilon, sustain_window, None, None, window_fraction
        )
    rec_idx = _first_run_start(~inside, sustain_window, start=eq_idx + sustain_window)
    return EquilibrationReport(
        times,
        distances,
        epsilon,
        sustain_window,
        float(times[eq_idx]),
        None if rec_idx is None else float(times[rec_idx]),
        window_fraction,
    )
