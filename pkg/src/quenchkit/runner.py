"""Experiment orchestration: build the coupled system, simulate, diagnose, write.

Outputs (all under the configured output directory):

  metadata.json           resolved config echo, spectrum summary, GGE data
  trajectory.csv          per-sample thermometry / energetics / GGE distances
  profile_<fam>_<X>_t<t>.csv   site / size scans at each snapshot time
  equilibration.csv       equilibration windows per monitored subsystem
  spectrum.csv, gge.csv, scan.csv   from the matching subcommands

Time columns are omega_A * t; energies and rates are in natural units
(hbar = k_B = 1, rates per unit physical time).  Runs are deterministic:
the same configuration produces byte-identical outputs.
"""

from __future__ import annotations

import dataclasses
import json
import math
from pathlib import Path

import numpy as np

from . import __version__
from .config import ConfigError, ExperimentConfig, SubsystemDef, centered_sites, resolved_dict
from .equilibration import detect_equilibration
from .gaussian import (
    CovarianceTrajectory,
    InstabilityError,
    bures_distance,
    marginal,
    mean_energy,
    product_initial_state,
    propagator,
    symplectic_eigenvalues,
    symplecticity_residual,
    thermal_covariance,
    williamson_from_potential,
)
from .gge import GGESpec, build_gge, gge_covariance, mode_energies, pair_charge_residual
from .lattice import build_interaction_potential, build_intra_potential, validate_stability
from .thermometry import (
    ThermometryReading,
    canonical_t_eff_from_energy,
    estimate_t_eff_autowiden,
    global_thermality,
    sliding_windows,
)


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return f"{x:.17g}"
    return str(x)


def _write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt(x) for x in row))
    path.write_text("\n".join(lines) + "\n")


class QuenchExperiment:
    """All derived objects of one configuration, shared by the subcommands."""

    def __init__(self, cfg: ExperimentConfig):
        self.cfg = cfg
        self.v_a = build_intra_potential(cfg.spec_a)
        self.v_b = build_intra_potential(cfg.spec_b)
        self.v_int = build_interaction_potential(cfg.spec_a, cfg.spec_b, cfg.topology)
        self.n_a = cfg.spec_a.n_sites
        self.n_b = cfg.spec_b.n_sites
        self.n_tot = self.n_a + self.n_b
        v_tot = np.zeros((self.n_tot, self.n_tot))
        v_tot[: self.n_a, : self.n_a] = self.v_a
        v_tot[self.n_a :, self.n_a :] = self.v_b
        v_tot[: self.n_a, self.n_a :] = self.v_int
        v_tot[self.n_a :, : self.n_a] = self.v_int.T
        self.v_tot = v_tot
        self.lambda_min = validate_stability(v_tot)
        scale = max(abs(self.lambda_min), float(np.max(np.abs(v_tot))))
        if self.lambda_min <= 1e-12 * scale:
            raise InstabilityError(
                f"total potential is unstable: min eigenvalue {self.lambda_min:.6e}"
            )
        self.basis_a = williamson_from_potential(self.v_a)
        self.basis_b = williamson_from_potential(self.v_b)
        basis_tot = williamson_from_potential(v_tot)
        self.sigma0 = product_initial_state(
            thermal_covariance(self.basis_a, cfg.temperature_a),
            thermal_covariance(self.basis_b, cfg.temperature_b),
        )
        self.gge_spec: GGESpec | None = None
        self.sigma_gge: np.ndarray | None = None
        if cfg.gge:
            self.gge_spec = build_gge(basis_tot, self.sigma0, cfg.degeneracy_tol)
            basis_tot = self.gge_spec.basis  # same modes, rotated inside degenerate blocks
            self.sigma_gge = gge_covariance(self.gge_spec)
        self.basis_tot = basis_tot
        self.traj = CovarianceTrajectory(basis_tot, self.sigma0)
        self.omega_scale = cfg.spec_a.omega  # times are reported as omega_A * t
        self.times_scaled = np.linspace(0.0, cfg.t_max, cfg.samples)
        self._energy_forms = None

    # -- geometry helpers -------------------------------------------------

    def total_sites(self, sub: SubsystemDef) -> np.ndarray:
        offset = 0 if sub.lattice == "A" else self.n_a
        return np.asarray(sub.sites, dtype=int) + offset

    def lattice_sites(self, which: str) -> np.ndarray:
        return np.arange(self.n_a) if which == "A" else self.n_a + np.arange(self.n_b)

    def lattice_basis(self, which: str):
        return self.basis_a if which == "A" else self.basis_b

    def spec(self, which: str):
        return self.cfg.spec_a if which == "A" else self.cfg.spec_b

    # -- energy quadratic forms -------------------------------------------

    def energy_forms(self):
        """Normal-coordinate forms for E_A, E_B, E_int traces (computed once)."""
        if self._energy_forms is None:
            n, na = self.n_tot, self.n_a
            g_a = np.zeros((2 * n, 2 * n))
            g_a[:na, :na] = 0.5 * self.v_a
            g_a[n : n + na, n : n + na] = 0.5 * np.eye(na)
            g_b = np.zeros((2 * n, 2 * n))
            g_b[na:n, na:n] = 0.5 * self.v_b
            g_b[n + na :, n + na :] = 0.5 * np.eye(self.n_b)
            g_int = np.zeros((2 * n, 2 * n))
            g_int[:na, na:n] = 0.5 * self.v_int
            g_int[na:n, :na] = 0.5 * self.v_int.T
            self._energy_forms = tuple(self.traj.to_normal_form(g) for g in (g_a, g_b, g_int))
        return self._energy_forms

    # -- spectrum / metadata ----------------------------------------------

    def degeneracy_partition(self) -> list:
        if self.gge_spec is not None:
            return self.gge_spec.partition
        from .gge import detect_degeneracies

        return detect_degeneracies(self.basis_tot.omega, self.cfg.degeneracy_tol)

    def spectrum_summary(self) -> dict:
        partition = self.degeneracy_partition()
        blocks = [b for b in partition if len(b) > 1]
        summary = {
            "n_modes": self.n_tot,
            "omega_min": float(self.basis_tot.omega.min()),
            "omega_max": float(self.basis_tot.omega.max()),
            "stability_lambda_min": self.lambda_min,
            "degenerate_blocks": [[int(i) for i in b] for b in blocks],
            "n_degenerate_blocks": len(blocks),
        }
        if self.gge_spec is not None:
            summary["gge"] = {
                "beta": self.gge_spec.beta.tolist(),
                "mode_energies": self.gge_spec.mode_energies.tolist(),
                "charge_residual": self.gge_spec.charge_residuals,
                "capped_modes": int(np.sum(self.gge_spec.capped)),
                "degeneracy_tolerance": self.gge_spec.degeneracy_tolerance,
                "rotated": self.gge_spec.basis.rotated,
            }
        return summary

    # -- per-sample diagnostics --------------------------------------------

    def subsystem_reading(self, state, sub: SubsystemDef) -> ThermometryReading:
        sigma_s = state.marginal(self.total_sites(sub))
        return estimate_t_eff_autowiden(
            sigma_s,
            self.lattice_basis(sub.lattice),
            np.asarray(sub.sites, dtype=int),
            self.cfg.bracket,
            prescan=self.cfg.prescan,
        )

    def gge_distance(self, state, sub: SubsystemDef) -> float:
        total = self.total_sites(sub)
        return bures_distance(state.marginal(total), marginal(self.sigma_gge, total))

    def global_reading(self, state, which: str) -> ThermometryReading:
        sigma_x = state.marginal(self.lattice_sites(which))
        return global_thermality(
            sigma_x, self.lattice_basis(which), self.cfg.bracket, prescan=self.cfg.prescan
        )

    # -- trajectory --------------------------------------------------------

    def compute_trajectory(self, progress=None) -> dict:
        """All per-sample columns; returns arrays keyed by column name."""
        cfg = self.cfg
        subs = cfg.subsystems
        n_samp = cfg.samples
        cols: dict[str, list] = {"t": list(self.times_scaled)}
        if cfg.thermometry:
            for s in subs:
                cols[f"{s.name}_f_max"] = []
                cols[f"{s.name}_t_eff"] = []
                cols[f"{s.name}_d_min"] = []
            cols["A_t_eff_can"] = []
            cols["B_t_eff_can"] = []
            if cfg.global_stride > 0:
                cols["A_f_global"] = []
                cols["B_f_global"] = []
        if cfg.energetics or cfg.thermometry:
            w_a, w_b, w_int = self.energy_forms()
        if cfg.energetics:
            e_a_list, e_b_list, e_int_list = [], [], []
        if cfg.gge:
            for s in subs:
                cols[f"{s.name}_d_gge"] = []
        for i, t_scaled in enumerate(self.times_scaled):
            state = self.traj.state_at(t_scaled / self.omega_scale)
            if cfg.thermometry:
                for s in subs:
                    r = self.subsystem_reading(state, s)
                    cols[f"{s.name}_f_max"].append(r.f_max)
                    cols[f"{s.name}_t_eff"].append(r.t_eff)
                    cols[f"{s.name}_d_min"].append(r.d_min)
                e_a = state.trace_form(w_a)
                e_b = state.trace_form(w_b)
                cols["A_t_eff_can"].append(
                    canonical_t_eff_from_energy(e_a, self.basis_a.omega)
                )
                cols["B_t_eff_can"].append(
                    canonical_t_eff_from_energy(e_b, self.basis_b.omega)
                )
                if cfg.global_stride > 0:
                    if i % cfg.global_stride == 0 or i == n_samp - 1:
                        cols["A_f_global"].append(self.global_reading(state, "A").f_max)
                        cols["B_f_global"].append(self.global_reading(state, "B").f_max)
                    else:
                        cols["A_f_global"].append(None)
                        cols["B_f_global"].append(None)
            if cfg.energetics:
                e_a_list.append(state.trace_form(w_a))
                e_b_list.append(state.trace_form(w_b))
                e_int_list.append(state.trace_form(w_int))
            if cfg.gge:
                for s in subs:
                    cols[f"{s.name}_d_gge"].append(self.gge_distance(state, s))
            if progress is not None:
                progress(i, n_samp)
        if cfg.energetics:
            times_phys = self.times_scaled / self.omega_scale
            cols["E_A"], cols["E_B"], cols["E_int"] = e_a_list, e_b_list, e_int_list
            cols["Qdot_A"] = list(np.gradient(np.array(e_a_list), times_phys))
            cols["Qdot_B"] = list(np.gradient(np.array(e_b_list), times_phys))
            cols["Edot_int"] = list(np.gradient(np.array(e_int_list), times_phys))
        return cols

    def trajectory_header(self) -> list[str]:
        cfg = self.cfg
        header = ["t"]
        if cfg.thermometry:
            for s in cfg.subsystems:
                header += [f"{s.name}_f_max", f"{s.name}_t_eff", f"{s.name}_d_min"]
            header += ["A_t_eff_can"]
            if cfg.global_stride > 0:
                header += ["A_f_global"]
            header += ["B_t_eff_can"]
            if cfg.global_stride > 0:
                header += ["B_f_global"]
        if cfg.energetics:
            header += ["E_A", "E_B", "E_int", "Qdot_A", "Qdot_B", "Edot_int"]
        if cfg.gge:
            header += [f"{s.name}_d_gge" for s in cfg.subsystems]
        return header

    # -- snapshot profiles ---------------------------------------------------

    def sliding_family(self, which: str, size: int) -> list[np.ndarray]:
        """Size-k windows sliding along a chain (2D: along the central column)."""
        spec = self.spec(which)
        if spec.dim == 1:
            return sliding_windows(spec.n_sites, size)
        nx, ny = spec.shape
        col = ny // 2
        column_sites = np.array([r * ny + col for r in range(nx)])
        if size > nx:
            raise ConfigError(f"sliding window of {size} exceeds column length {nx}")
        return [column_sites[start : start + size] for start in range(nx - size + 1)]

    def growing_family(self, which: str, max_size: int) -> list[np.ndarray]:
        spec = self.spec(which)
        return [centered_sites(spec, k) for k in range(1, max_size + 1)]

    def profile_rows(self, state, which: str, family: list[np.ndarray], ids) -> list[list]:
        basis = self.lattice_basis(which)
        offset = 0 if which == "A" else self.n_a
        rows = []
        for wid, local_sites in zip(ids, family):
            sigma_s = state.marginal(np.asarray(local_sites, dtype=int) + offset)
            r = estimate_t_eff_autowiden(
                sigma_s, basis, local_sites, self.cfg.bracket, prescan=self.cfg.prescan
            )
            rows.append([wid, r.f_max, r.t_eff])
        return rows

    # -- output writing ------------------------------------------------------

    def write_outputs(self, out_dir: Path, quiet: bool = False) -> list[str]:
        cfg = self.cfg
        out_dir.mkdir(parents=True, exist_ok=True)
        written: list[str] = []

        cols = self.compute_trajectory(
            progress=None if quiet else _progress_printer("trajectory")
        )
        header = self.trajectory_header()
        rows = [[cols[h][i] for h in header] for i in range(cfg.samples)]
        _write_csv(out_dir / "trajectory.csv", header, rows)
        written.append("trajectory.csv")

        if cfg.thermometry and (cfg.sliding_size > 0 or cfg.growing_max > 0):
            for t_scaled in cfg.snapshot_times:
                state = self.traj.state_at(t_scaled / self.omega_scale)
                tag = f"t{t_scaled:g}"
                for which in ("A", "B"):
                    if cfg.sliding_size > 0:
                        fam = self.sliding_family(which, cfg.sliding_size)
                        ids = list(range(1, len(fam) + 1))
                        name = f"profile_sliding_{which}_{tag}.csv"
                        _write_csv(
                            out_dir / name,
                            ["nu", "f_max", "t_eff"],
                            self.profile_rows(state, which, fam, ids),
                        )
                        written.append(name)
                    if cfg.growing_max > 0:
                        fam = self.growing_family(which, cfg.growing_max)
                        ids = list(range(1, cfg.growing_max + 1))
                        name = f"profile_growing_{which}_{tag}.csv"
                        _write_csv(
                            out_dir / name,
                            ["nu", "f_max", "t_eff"],
                            self.profile_rows(state, which, fam, ids),
                        )
                        written.append(name)

        if cfg.gge and cfg.subsystems:
            eq_rows = []
            for s in cfg.subsystems:
                distances = np.array(cols[f"{s.name}_d_gge"])
                rep = detect_equilibration(
                    distances, self.times_scaled, cfg.epsilon, cfg.sustain_window
                )
                eq_rows.append(
                    [s.name, rep.epsilon, rep.sustain_window, rep.t_eq, rep.t_rec, rep.window_fraction]
                )
            _write_csv(
                out_dir / "equilibration.csv",
                ["subsystem", "epsilon", "sustain_window", "t_eq", "t_rec", "window_fraction"],
                eq_rows,
            )
            written.append("equilibration.csv")

        meta = self.metadata(written + ["metadata.json"], header)
        (out_dir / "metadata.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
        written.append("metadata.json")
        return written

    def metadata(self, files: list[str], schema: list[str] | None = None) -> dict:
        meta = {
            "quenchkit_version": __version__,
            "config": resolved_dict(self.cfg),
            "spectrum": self.spectrum_summary(),
            "files": sorted(files),
        }
        if schema is not None:
            meta["trajectory_columns"] = schema
        return meta

    # -- subcommands beyond `run` ---------------------------------------------

    def write_spectrum(self, out_dir: Path) -> None:
        out_dir.mkdir(parents=True, exist_ok=True)
        partition = self.degeneracy_partition()
        block_of = {}
        for bid, block in enumerate(partition):
            for k in block:
                block_of[k] = bid
        rows = [
            [k + 1, float(self.basis_tot.omega[k]), block_of[k], len(partition[block_of[k]])]
            for k in range(self.n_tot)
        ]
        _write_csv(out_dir / "spectrum.csv", ["kappa", "omega", "block_id", "block_size"], rows)
        (out_dir / "metadata.json").write_text(
            json.dumps(self.metadata(["spectrum.csv", "metadata.json"]), indent=2, sort_keys=True)
            + "\n"
        )

    def write_gge(self, out_dir: Path) -> None:
        if self.gge_spec is None:
            raise ConfigError("gge subcommand requires diagnostics.gge = true")
        out_dir.mkdir(parents=True, exist_ok=True)
        g = self.gge_spec
        rows = [
            [k + 1, float(g.basis.omega[k]), float(g.beta[k]), float(g.mode_energies[k]), int(g.capped[k])]
            for k in range(self.n_tot)
        ]
        _write_csv(out_dir / "gge.csv", ["kappa", "omega", "beta", "h", "capped"], rows)
        (out_dir / "metadata.json").write_text(
            json.dumps(self.metadata(["gge.csv", "metadata.json"]), indent=2, sort_keys=True) + "\n"
        )

    def validate_invariants(self) -> list[tuple[str, bool, float, float]]:
        """Structural invariant suite; returns (name, passed, value, limit) rows."""
        checks: list[tuple[str, bool, float, float]] = []
        v_norm = float(self.basis_tot.omega.max() ** 2)

        def add(name, value, limit):
            checks.append((name, bool(value <= limit), float(value), float(limit)))

        add("s_symplecticity", symplecticity_residual(self.basis_tot.s), 1e-10)
        f_tot = np.zeros((2 * self.n_tot, 2 * self.n_tot))
        f_tot[: self.n_tot, : self.n_tot] = self.v_tot
        f_tot[self.n_tot :, self.n_tot :] = np.eye(self.n_tot)
        target = np.concatenate((self.basis_tot.omega, self.basis_tot.omega))
        resid = np.max(np.abs(self.basis_tot.s.T @ f_tot @ self.basis_tot.s - np.diag(target)))
        add("williamson_residual", resid / v_norm, 1e-10)
        for t_scaled in (1.0, 10.0, 100.0):
            e = propagator(self.basis_tot, t_scaled / self.omega_scale)
            add(f"propagator_symplecticity_t{t_scaled:g}", symplecticity_residual(e), 1e-10)
        d0 = symplectic_eigenvalues(self.sigma0)
        add("initial_state_physical", max(0.0, 0.5 - float(d0.min())), 1e-9)
        e0 = mean_energy(self.sigma0, self.v_tot)
        drift = 0.0
        for t_scaled in np.linspace(0, self.cfg.t_max, 5)[1:]:
            sigma_t = self.traj.covariance(t_scaled / self.omega_scale)
            drift = max(drift, abs(mean_energy(sigma_t, self.v_tot) - e0) / abs(e0))
        add("energy_conservation_rel", drift, 1e-10)
        sigma_mid = self.traj.covariance(0.5 * self.cfg.t_max / self.omega_scale)
        d_mid = symplectic_eigenvalues(sigma_mid)
        add("symplectic_spectrum_preservation", float(np.max(np.abs(d_mid - d0))), 1e-9)
        if self.gge_spec is not None:
            h_gge = mode_energies(self.gge_spec.basis, self.sigma_gge)
            h0 = self.gge_spec.mode_energies
            add(
                "gge_charge_matching_rel",
                float(np.max(np.abs(h_gge - h0) / np.abs(h0))),
                1e-9,
            )
            if self.gge_spec.degenerate:
                add(
                    "gge_pair_charge_residual",
                    pair_charge_residual(self.gge_spec.basis, self.sigma0, self.gge_spec.partition)
                    / float(np.max(h0)),
                    1e-9,
                )
        return checks

    def scan_rows(self) -> tuple[list[str], list[list]]:
        """Sweep one scalar parameter; one row of snapshot diagnostics per value."""
        cfg = self.cfg
        if not cfg.scan_parameter or not cfg.scan_values:
            raise ConfigError("scan requires scan.parameter and scan.values")
        header = ["value", "A_f_global", "A_t_arg", "B_f_global", "B_t_arg"]
        for s in cfg.subsystems:
            header += [f"{s.name}_f_max", f"{s.name}_t_eff", f"{s.name}_d_min"]
        rows = []
        for value in cfg.scan_values:
            sub_cfg = _with_parameter(cfg, cfg.scan_parameter, value)
            exp = QuenchExperiment(sub_cfg)
            state = exp.traj.state_at(cfg.scan_time / exp.omega_scale)
            row = [value]
            for which in ("A", "B"):
                r = exp.global_reading(state, which)
                row += [r.f_max, r.t_eff]
            for s in sub_cfg.subsystems:
                r = exp.subsystem_reading(state, s)
                row += [r.f_max, r.t_eff, r.d_min]
            rows.append(row)
        return header, rows


def _progress_printer(label: str):
    def cb(i, n):
        if n >= 20 and (i + 1) % max(1, n // 10) == 0:
            print(f"  {label}: {i + 1}/{n} samples", flush=True)

    return cb


_SCANNABLE = {
    "coupling.lambda",
    "coupling.lambda_over_omega_ab",
    "initial.temperature_a",
    "initial.temperature_b",
    "lattice_a.g",
    "lattice_b.g",
    "lattice_a.g_over_omega2",
    "lattice_b.g_over_omega2",
    "lattice_a.alpha",
    "lattice_b.alpha",
}


def _with_parameter(cfg: ExperimentConfig, parameter: str, value: float) -> ExperimentConfig:
    if parameter not in _SCANNABLE:
        raise ConfigError(
            f"scan.parameter {parameter!r} not supported; choose one of {sorted(_SCANNABLE)}"
        )
    cfg = dataclasses.replace(cfg)
    if parameter == "coupling.lambda":
        cfg.topology = dataclasses.replace(cfg.topology, lam=value)
    elif parameter == "coupling.lambda_over_omega_ab":
        cfg.topology = dataclasses.replace(
            cfg.topology, lam=value * cfg.spec_a.omega * cfg.spec_b.omega
        )
    elif parameter == "initial.temperature_a":
        cfg.temperature_a = value
    elif parameter == "initial.temperature_b":
        cfg.temperature_b = value
    else:
        which, field_name = parameter.split(".")
        spec = cfg.spec_a if which == "lattice_a" else cfg.spec_b
        if field_name == "g":
            spec = dataclasses.replace(spec, g=value)
        elif field_name == "g_over_omega2":
            spec = dataclasses.replace(spec, g=value * spec.omega**2)
        else:
            spec = dataclasses.replace(spec, alpha=value if value > 0 else math.inf)
        if which == "lattice_a":
            cfg.spec_a = spec
        else:
            cfg.spec_b = spec
    return cfg
