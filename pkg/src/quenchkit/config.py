"""Flat key-value experiment configuration.

The on-disk format is one dotted key per line, diffable and hand-editable:

    lattice_a.omega = 1.55
    coupling.kind = FB
    snapshots.times = 143.84, 287.0

Unknown keys are rejected.  Every default that applies is materialized into
the resolved configuration, which the runner echoes verbatim into the run
metadata, so a run's inputs are always fully explicit in its outputs.

Couplings may be given either as absolute strengths (lattice_a.g,
coupling.lambda) or as the dimensionless ratios used throughout the source
material (lattice_a.g_over_omega2 = g/omega^2,
coupling.lambda_over_omega_ab = lambda/(omega_A omega_B)).

All times (time.t_max, snapshots.times, scan.time) are in units of
1/omega_A, i.e. the numbers are omega_A * t, matching the trajectory output.
Site lists are 1-based in configs (row-major flattened for 2D) and converted
to 0-based indices internally.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .lattice import CouplingTopology, LatticeSpec


class ConfigError(ValueError):
    """Malformed or inconsistent experiment configuration."""


@dataclass(frozen=True)
class SubsystemDef:
    """A named probe region inside one lattice (local 0-based site indices)."""

    name: str
    lattice: str  # "A" or "B"
    sites: tuple[int, ...]


@dataclass
class ExperimentConfig:
    spec_a: LatticeSpec
    spec_b: LatticeSpec
    topology: CouplingTopology
    temperature_a: float
    temperature_b: float
    t_max: float  # in units of 1/omega_A
    samples: int
    subsystems: list[SubsystemDef] = field(default_factory=list)
    sliding_size: int = 0
    growing_max: int = 0
    snapshot_times: tuple[float, ...] = ()
    degeneracy_tol: float = 1e-8
    epsilon: float = 0.02
    sustain_window: int = 16
    bracket_scale_lo: float = 1e-3
    bracket_scale_hi: float = 1e3
    prescan: int = 32
    thermometry: bool = True
    global_stride: int = 0
    gge: bool = True
    energetics: bool = True
    output_dir: str = "run_output"
    scan_parameter: str = ""
    scan_values: tuple[float, ...] = ()
    scan_time: float = 0.0

    @property
    def bracket(self) -> tuple[float, float]:
        t_ref = max(self.temperature_a, self.temperature_b)
        return (self.bracket_scale_lo * t_ref, self.bracket_scale_hi * t_ref)


_BOOL = {"true": True, "false": False, "1": True, "0": False, "yes": True, "no": False}


def parse_flat_file(path: str | Path) -> dict[str, str]:
    """Read `key = value` lines; '#' starts a comment; later keys override."""
    entries: dict[str, str] = {}
    text = Path(path).read_text()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        key, value = line.split("=", 1)
        entries[key.strip().lower()] = value.strip()
    return entries


def _to_float(key: str, raw: str) -> float:
    try:
        if raw.lower() in ("inf", "infinite", "infinity"):
            return math.inf
        return float(raw)
    except ValueError as exc:
        raise ConfigError(f"{key}: expected a number, got {raw!r}") from exc


def _to_int(key: str, raw: str) -> int:
    try:
        return int(raw)
    except ValueError as exc:
        raise ConfigError(f"{key}: expected an integer, got {raw!r}") from exc


def _to_bool(key: str, raw: str) -> bool:
    try:
        return _BOOL[raw.lower()]
    except KeyError as exc:
        raise ConfigError(f"{key}: expected true/false, got {raw!r}") from exc


def _to_float_list(key: str, raw: str) -> tuple[float, ...]:
    if not raw:
        return ()
    return tuple(_to_float(key, part.strip()) for part in raw.split(",") if part.strip())


def _to_int_list(key: str, raw: str) -> tuple[int, ...]:
    if not raw:
        return ()
    return tuple(_to_int(key, part.strip()) for part in raw.split(",") if part.strip())


def _lattice_spec(entries: dict[str, str], prefix: str, consumed: set[str]) -> LatticeSpec:
    def take(name: str, default: str | None = None) -> str | None:
        key = f"{prefix}.{name}"
        consumed.add(key)
        return entries.get(key, default)

    dim = _to_int(f"{prefix}.dim", take("dim", "1"))
    shape_raw = take("shape")
    if shape_raw is None:
        raise ConfigError(f"{prefix}.shape is required")
    if "x" in shape_raw:
        parts = shape_raw.lower().split("x")
        if len(parts) != 2:
            raise ConfigError(f"{prefix}.shape: expected 'nx x ny', got {shape_raw!r}")
        shape: int | tuple[int, int] = (
            _to_int(f"{prefix}.shape", parts[0]),
            _to_int(f"{prefix}.shape", parts[1]),
        )
    else:
        shape = _to_int(f"{prefix}.shape", shape_raw)
    if dim == 2 and isinstance(shape, int):
        raise ConfigError(f"{prefix}.shape must be 'nx x ny' for dim = 2")
    if dim == 1 and not isinstance(shape, int):
        raise ConfigError(f"{prefix}.shape must be a single count for dim = 1")
    omega_raw = take("omega")
    if omega_raw is None:
        raise ConfigError(f"{prefix}.omega is required")
    omega = _to_float(f"{prefix}.omega", omega_raw)
    g_raw = take("g")
    ratio_raw = take("g_over_omega2")
    if (g_raw is None) == (ratio_raw is None):
        raise ConfigError(f"exactly one of {prefix}.g and {prefix}.g_over_omega2 is required")
    g = _to_float(f"{prefix}.g", g_raw) if g_raw is not None else _to_float(
        f"{prefix}.g_over_omega2", ratio_raw
    ) * omega**2
    alpha = _to_float(f"{prefix}.alpha", take("alpha", "inf"))
    try:
        return LatticeSpec(dim=dim, shape=shape, omega=omega, g=g, alpha=alpha)
    except ValueError as exc:
        raise ConfigError(f"{prefix}: {exc}") from exc


def _subsystems(entries: dict[str, str], consumed: set[str], spec_a, spec_b) -> list[SubsystemDef]:
    names = []
    for key in entries:
        if key.startswith("subsystem."):
            parts = key.split(".")
            if len(parts) != 3:
                raise ConfigError(f"{key}: expected subsystem.<name>.<field>")
            if parts[1] not in names:
                names.append(parts[1])
    out = []
    for name in names:
        latt = entries.get(f"subsystem.{name}.lattice")
        consumed.add(f"subsystem.{name}.lattice")
        if latt is None or latt.upper() not in ("A", "B"):
            raise ConfigError(f"subsystem.{name}.lattice must be A or B")
        latt = latt.upper()
        spec = spec_a if latt == "A" else spec_b
        sites_raw = entries.get(f"subsystem.{name}.sites")
        window_raw = entries.get(f"subsystem.{name}.window")
        consumed.update({f"subsystem.{name}.sites", f"subsystem.{name}.window"})
        if (sites_raw is None) == (window_raw is None):
            raise ConfigError(
                f"subsystem.{name}: exactly one of .sites (1-based list) or .window (centered size) required"
            )
        if sites_raw is not None:
            one_based = _to_int_list(f"subsystem.{name}.sites", sites_raw)
            sites = tuple(s - 1 for s in one_based)
            if any(s < 0 or s >= spec.n_sites for s in sites):
                raise ConfigError(
                    f"subsystem.{name}.sites out of range 1..{spec.n_sites}: {one_based}"
                )
            if len(set(sites)) != len(sites):
                raise ConfigError(f"subsystem.{name}.sites must be distinct")
        else:
            size = _to_int(f"subsystem.{name}.window", window_raw)
            if not 1 <= size <= spec.n_sites:
                raise ConfigError(f"subsystem.{name}.window must be in 1..{spec.n_sites}")
            sites = tuple(int(s) for s in centered_sites(spec, size))
        out.append(SubsystemDef(name=name, lattice=latt, sites=sites))
    return out


def centered_sites(spec: LatticeSpec, size: int) -> np.ndarray:
    """A centered contiguous probe window: mid-chain for 1D, mid-row for 2D."""
    if spec.dim == 1:
        start = (spec.n_sites - size) // 2
        return np.arange(start, start + size)
    nx, ny = spec.shape
    if size > ny:
        raise ConfigError(f"centered window of {size} sites exceeds row length {ny}")
    row = nx // 2
    start = row * ny + (ny - size) // 2
    return np.arange(start, start + size)


def load_config(path: str | Path, output_dir_override: str | None = None) -> ExperimentConfig:
    entries = parse_flat_file(path)
    consumed: set[str] = set()

    def take(key: str, default: str | None = None) -> str | None:
        consumed.add(key)
        return entries.get(key, default)

    spec_a = _lattice_spec(entries, "lattice_a", consumed)
    spec_b = _lattice_spec(entries, "lattice_b", consumed)

    kind = take("coupling.kind", "FB").upper()
    lam_raw = take("coupling.lambda")
    lam_ratio_raw = take("coupling.lambda_over_omega_ab")
    if (lam_raw is None) == (lam_ratio_raw is None):
        raise ConfigError("exactly one of coupling.lambda and coupling.lambda_over_omega_ab is required")
    lam = (
        _to_float("coupling.lambda", lam_raw)
        if lam_raw is not None
        else _to_float("coupling.lambda_over_omega_ab", lam_ratio_raw) * spec_a.omega * spec_b.omega
    )
    edge_row = _to_int("coupling.edge_row", take("coupling.edge_row", "0"))
    try:
        topology = CouplingTopology(kind=kind, lam=lam, edge_row=edge_row)
    except ValueError as exc:
        raise ConfigError(f"coupling: {exc}") from exc

    t_a_raw = take("initial.temperature_a")
    t_b_raw = take("initial.temperature_b")
    if t_a_raw is None or t_b_raw is None:
        raise ConfigError("initial.temperature_a and initial.temperature_b are required")
    temperature_a = _to_float("initial.temperature_a", t_a_raw)
    temperature_b = _to_float("initial.temperature_b", t_b_raw)
    if temperature_a < 0 or temperature_b < 0:
        raise ConfigError("initial temperatures must be >= 0")

    t_max = _to_float("time.t_max", take("time.t_max", "300.0"))
    samples = _to_int("time.samples", take("time.samples", "400"))
    if samples < 2:
        raise ConfigError("time.samples must be >= 2")
    if t_max <= 0:
        raise ConfigError("time.t_max must be positive")

    subsystems = _subsystems(entries, consumed, spec_a, spec_b)

    cfg = ExperimentConfig(
        spec_a=spec_a,
        spec_b=spec_b,
        topology=topology,
        temperature_a=temperature_a,
        temperature_b=temperature_b,
        t_max=t_max,
        samples=samples,
        subsystems=subsystems,
        sliding_size=_to_int("profiles.sliding_size", take("profiles.sliding_size", "0")),
        growing_max=_to_int("profiles.growing_max", take("profiles.growing_max", "0")),
        snapshot_times=_to_float_list("snapshots.times", take("snapshots.times", "")),
        degeneracy_tol=_to_float("tolerances.degeneracy", take("tolerances.degeneracy", "1e-8")),
        epsilon=_to_float("equilibration.epsilon", take("equilibration.epsilon", "0.02")),
        sustain_window=_to_int(
            "equilibration.sustain_window", take("equilibration.sustain_window", "16")
        ),
        bracket_scale_lo=_to_float(
            "optimizer.bracket_scale_lo", take("optimizer.bracket_scale_lo", "1e-3")
        ),
        bracket_scale_hi=_to_float(
            "optimizer.bracket_scale_hi", take("optimizer.bracket_scale_hi", "1e3")
        ),
        prescan=_to_int("optimizer.prescan", take("optimizer.prescan", "32")),
        thermometry=_to_bool("diagnostics.thermometry", take("diagnostics.thermometry", "true")),
        global_stride=_to_int(
            "diagnostics.global_thermality_stride",
            take("diagnostics.global_thermality_stride", "0"),
        ),
        gge=_to_bool("diagnostics.gge", take("diagnostics.gge", "true")),
        energetics=_to_bool("diagnostics.energetics", take("diagnostics.energetics", "true")),
        output_dir=take("output.dir", "run_output"),
        scan_parameter=take("scan.parameter", ""),
        scan_values=_to_float_list("scan.values", take("scan.values", "")),
        scan_time=_to_float("scan.time", take("scan.time", "0")),
    )
    if output_dir_override is not None:
        cfg.output_dir = output_dir_override

    unknown = sorted(set(entries) - consumed)
    if unknown:
        raise ConfigError(f"unknown configuration keys: {', '.join(unknown)}")
    if cfg.epsilon <= 0:
        raise ConfigError("equilibration.epsilon must be positive")
    if cfg.sustain_window < 1:
        raise ConfigError("equilibration.sustain_window must be >= 1")
    if not (0 < cfg.bracket_scale_lo < cfg.bracket_scale_hi):
        raise ConfigError("optimizer bracket scales must satisfy 0 < lo < hi")
    if cfg.prescan < 4:
        raise ConfigError("optimizer.prescan must be >= 4")
    if cfg.sliding_size < 0 or cfg.growing_max < 0:
        raise ConfigError("profile sizes must be >= 0")
    if cfg.global_stride < 0:
        raise ConfigError("diagnostics.global_thermality_stride must be >= 0")
    return cfg


def resolved_dict(cfg: ExperimentConfig) -> dict:
    """Fully explicit configuration echo (every applied default included)."""
    def spec_dict(spec: LatticeSpec) -> dict:
        return {
            "dim": spec.dim,
            "shape": list(spec.shape) if isinstance(spec.shape, tuple) else spec.shape,
            "omega": spec.omega,
            "g": spec.g,
            "g_over_omega2": spec.g / spec.omega**2,
            "alpha": "inf" if math.isinf(spec.alpha) else spec.alpha,
        }

    return {
        "lattice_a": spec_dict(cfg.spec_a),
        "lattice_b": spec_dict(cfg.spec_b),
        "coupling": {
            "kind": cfg.topology.kind,
            "lambda": cfg.topology.lam,
            "lambda_over_omega_ab": cfg.topology.lam / (cfg.spec_a.omega * cfg.spec_b.omega),
            "edge_row": cfg.topology.edge_row,
        },
        "initial": {"temperature_a": cfg.temperature_a, "temperature_b": cfg.temperature_b},
        "time": {"t_max": cfg.t_max, "samples": cfg.samples, "units": "omega_a * t"},
        "subsystems": {
            s.name: {"lattice": s.lattice, "sites_1based": [i + 1 for i in s.sites]}
            for s in cfg.subsystems
        },
        "profiles": {"sliding_size": cfg.sliding_size, "growing_max": cfg.growing_max},
        "snapshots": {"times": list(cfg.snapshot_times)},
        "tolerances": {"degeneracy": cfg.degeneracy_tol},
        "equilibration": {"epsilon": cfg.epsilon, "sustain_window": cfg.sustain_window},
        "optimizer": {
            "bracket_scale_lo": cfg.bracket_scale_lo,
            "bracket_scale_hi": cfg.bracket_scale_hi,
            "bracket": list(cfg.bracket),
            "prescan": cfg.prescan,
        },
        "diagnostics": {
            "thermometry": cfg.thermometry,
            "global_thermality_stride": cfg.global_stride,
            "gge": cfg.gge,
            "energetics": cfg.energetics,
        },
        "output": {"dir": cfg.output_dir},
        "scan": {
            "parameter": cfg.scan_parameter,
            "values": list(cfg.scan_values),
            "time": cfg.scan_time,
        },
    }
