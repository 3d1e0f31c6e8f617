
import numpy as np
import pytest
from scipy.integrate import solve_ivp

from quenchkit.energetics import (
    build_ledger,
    energy_split,
    flows,
    predict_teq,
    ttm_consistency,
)
from quenchkit.gaussian import (
    CovarianceTrajectory,
    GaussianError,
    mean_energy,
    product_initial_state,
    thermal_covariance,
    williamson_from_potential,
)
from quenchkit.lattice import (
    CouplingTopology,
    LatticeSpec,
    assemble_total,
    build_interaction_potential,
    build_intra_potential,
)
from quenchkit.thermometry import heat_capacity, thermal_energy


def _system(lam=0.3, t_a=0.2, t_b=1.1):
    spec_a = LatticeSpec(1, 5, 1.55, 0.16 * 1.55**2, 0.5)
    spec_b = LatticeSpec(1, 5, 1.5, 0.19 * 1.5**2, 0.5)
    v_a, v_b = build_intra_potential(spec_a), build_intra_potential(spec_b)
    v_int = build_interaction_potential(spec_a, spec_b, CouplingTopology("FB", lam))
    v = assemble_total(v_a, v_b, v_int)
    basis = williamson_from_potential(v)
    sigma0 = product_initial_state(
        thermal_covariance(williamson_from_potential(v_a), t_a),
        thermal_covariance(williamson_from_potential(v_b), t_b),
    )
    return v_a, v_b, v_int, v, basis, sigma0


def test_split_closes_ledger_exactly():
    v_a, v_b, v_int, v, basis, sigma0 = _system()
    traj = CovarianceTrajectory(basis, sigma0)
    for t in (0.0, 2.7, 31.0):
        sigma = traj.covariance(t)
        e_a, e_b, e_int = energy_split(sigma, v_a, v_b, v_int)
        total = mean_energy(sigma, v)
        assert e_a + e_b + e_int == pytest.approx(total, rel=1e-12)


def test_interaction_energy_zero_cases():
    v_a, v_b, v_int, v, basis, sigma0 = _system()
    # uncorrelated initial state: q cross-correlations vanish
    assert energy_split(sigma0, v_a, v_b, v_int)[2] == pytest.approx(0.0, abs=1e-14)
    # lambda = 0: E_int = 0 at all times
    v_a0, v_b0, _, v0, basis0, sigma00 = _system(lam=0.0)
    traj = CovarianceTrajectory(basis0, sigma00)
    zero_block = np.zeros_like(v_a0)
    for t in (1.0, 8.0):
        assert energy_split(traj.covariance(t), v_a0, v_b0, zero_block)[2] == 0.0


def test_flows_constant_energy_and_conservation():
    times = np.linspace(0, 10, 21)
    assert np.all(flows(times, np.full(21, 3.3)) == 0)
    v_a, v_b, v_int, v, basis, sigma0 = _system()
    traj = CovarianceTrajectory(basis, sigma0)
    e = np.array([energy_split(traj.covariance(t), v_a, v_b, v_int) for t in times])
    ledger = build_ledger(times, e[:, 0], e[:, 1], e[:, 2])
    drift = np.max(np.abs(ledger.e_total - ledger.e_total[0])) / abs(ledger.e_total[0])
    assert drift <= 1e-10
    assert np.max(np.abs(ledger.qdot_a + ledger.qdot_b + ledger.edot_int)) <= 1e-8


def test_flows_requires_uniform_grid():
    with pytest.raises(GaussianError):
        flows(np.array([0.0, 1.0, 3.0]), np.array([1.0, 2.0, 3.0]))
    with pytest.raises(GaussianError):
        flows(np.array([0.0, 1.0]), np.array([1.0, 2.0]))


def test_predict_teq_trivial_and_limits():
    v_a, v_b, *_ = _system()
    om_a = williamson_from_potential(v_a).omega
    om_b = williamson_from_potential(v_b).omega
    assert predict_teq(om_a, om_b, 0.7, 0.7) == 0.7
    # identical lattices, high temperatures: classical average
    hot = predict_teq(om_a, om_a, 2.0e4, 4.0e4)
    assert hot == pytest.approx(3.0e4, rel=1e-6)
    t_eq = predict_teq(om_a, om_b, 0.1, 1.0)
    assert 0.1 < t_eq < 1.0
    target = thermal_energy(om_a, 0.1) + thermal_energy(om_b, 1.0)
    assert thermal_energy(om_a, t_eq) + thermal_energy(om_b, t_eq) == pytest.approx(
        target, rel=1e-10
    )


def test_predict_teq_matches_grid_scan_fig3_parameters():
    spec_a = LatticeSpec(1, 200, 1.55, 0.16 * 1.55**2, 0.5)
    spec_b = LatticeSpec(1, 200, 1.5, 0.19 * 1.5**2, 0.5)
    om_a = williamson_from_potential(build_intra_potential(spec_a)).omega
    om_b = williamson_from_potential(build_intra_potential(spec_b)).omega
    t_eq = predict_teq(om_a, om_b, 0.1, 1.0)
    grid = np.linspace(0.1, 1.0, 20001)
    target = thermal_energy(om_a, 0.1) + thermal_energy(om_b, 1.0)
    residuals = [abs(thermal_energy(om_a, t) + thermal_energy(om_b, t) - target) for t in grid]
    best = grid[int(np.argmin(residuals))]
    assert t_eq == pytest.approx(best, abs=1e-4)  # within one half grid cell
    assert abs(
        thermal_energy(om_a, t_eq) + thermal_energy(om_b, t_eq) - target
    ) <= 1e-6 * target


def test_ttm_exponential_gap_recovers_constant_rate():
    gamma = 0.37
    times = np.linspace(0, 12, 1201)
    t_a = 0.6 + 0.25 * np.exp(-gamma * times)
    t_b = np.full_like(times, 0.6)
    one = lambda temp: 1.0
    report = ttm_consistency(times, t_a, t_b, one, one)
    assert report.monotone and not report.degenerate
    np.testing.assert_allclose(report.j[1:-1], gamma, rtol=1e-6)
    np.testing.assert_allclose(report.k[1:-1], gamma / 2.0, rtol=1e-6)


def test_ttm_degenerate_case():
    times = np.linspace(0, 5, 50)
    t = np.full_like(times, 0.8)
    report = ttm_consistency(times, t, t, lambda x: 1.0, lambda x: 1.0)
    assert report.degenerate and report.monotone


def test_ttm_round_trip_with_known_conductance():
    v_a, v_b, *_ = _system()
    om_a = williamson_from_potential(v_a).omega
    om_b = williamson_from_potential(v_b).omega

    def k_true(t_a, t_b):
        return 0.02 * (1.0 + 0.3 * (t_a + t_b))

    def rhs(_, temps):
        t_a, t_b = temps
        k = k_true(t_a, t_b)
        return [
            -(t_a - t_b) * k / heat_capacity(om_a, t_a),
            -(t_b - t_a) * k / heat_capacity(om_b, t_b),
        ]

    sol = solve_ivp(rhs, (0.0, 40.0), [1.2, 0.4], rtol=1e-11, atol=1e-12, dense_output=True)
    times = np.linspace(0.0, 40.0, 4001)
    t_a, t_b = sol.sol(times)
    report = ttm_consistency(
        times,
        t_a,
        t_b,
        lambda t: heat_capacity(om_a, t),
        lambda t: heat_capacity(om_b, t),
    )
    assert report.monotone
    expected = k_true(t_a, t_b)
    rel = np.abs(report.k - expected) / expected
    assert np.max(rel[1:-1]) <= 1e-4


def test_ttm_flags_non_monotone_gap():
    times = np.linspace(0, 20, 2001)
    gap = 0.5 * np.exp(-0.1 * times) * np.cos(0.9 * times)
    t_b = np.full_like(times, 0.7)
    report = ttm_consistency(times, t_b + gap, t_b, lambda x: 1.0, lambda x: 1.0)
    assert not report.monotone
    assert report.negative_fraction > 0.2
