"""Potential matrices for open-boundary harmonic lattices and their couplings.

Conventions used throughout the package:

* Units: hbar = k_B = 1, all oscillator masses scaled to 1.
* A lattice Hamiltonian is H = 1/2 x^T (V + I) x with x = (q_1..q_N, p_1..p_N);
  V is the symmetric "potential matrix" built here.  A pair coupling
  G q_nu q_nu' contributes G to *both* mirror entries V[nu, nu'] and
  V[nu', nu], since each off-diagonal entry appears twice in 1/2 q^T V q.
* Sites of a 2D lattice are flattened row-major: site (r, c) -> r * ny + c
  for shape (nx, ny) (nx rows, ny columns).  1-based site numbers in user
  input map to 0-based flat indices by subtracting 1.
* Couplings decay with the Manhattan distance between sites; alpha = inf
  means nearest-neighbor only (couple sites at distance exactly 1).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


class LatticeError(ValueError):
    """Invalid lattice or coupling description."""


@dataclass(frozen=True)
class LatticeSpec:
    """Geometry and couplings of one harmonic lattice.

    dim    : 1 or 2
    shape  : site count n for 1D, (nx, ny) for 2D
    omega  : on-site frequency, > 0
    g      : intra-lattice coupling amplitude (may be negative; stability is
             checked separately on the assembled potential)
    alpha  : interaction-range exponent > 0, or math.inf for nearest-neighbor
    """

    dim: int
    shape: int | tuple[int, int]
    omega: float
    g: float
    alpha: float

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise LatticeError(f"dim must be 1 or 2, got {self.dim}")
        if self.dim == 1:
            if not isinstance(self.shape, int) or self.shape < 2:
                raise LatticeError(f"1D shape must be an int >= 2, got {self.shape!r}")
        else:
            if (
                not isinstance(self.shape, tuple)
                or len(self.shape) != 2
                or not all(isinstance(n, int) and n >= 2 for n in self.shape)
            ):
                raise LatticeError(f"2D shape must be (nx, ny) with nx, ny >= 2, got {self.shape!r}")
        if not (self.omega > 0):
            raise LatticeError(f"omega must be positive, got {self.omega}")
        if not (self.alpha > 0):
            raise LatticeError(f"alpha must be positive or infinite, got {self.alpha}")

    @property
    def n_sites(self) -> int:
        if self.dim == 1:
            return self.shape
        nx, ny = self.shape
        return nx * ny

    def site_coords(self) -> list[tuple[int, ...]]:
        """Coordinates of all sites in flat (row-major) order."""
        if self.dim == 1:
            return [(i,) for i in range(self.shape)]
        nx, ny = self.shape
        return [(r, c) for r in range(nx) for c in range(ny)]

    def site_index(self, coord: tuple[int, ...]) -> int:
        """Flat 0-based index of a site coordinate."""
        if self.dim == 1:
            (i,) = coord
            if not 0 <= i < self.shape:
                raise LatticeError(f"site {coord} out of range for shape {self.shape}")
            return i
        nx, ny = self.shape
        r, c = coord
        if not (0 <= r < nx and 0 <= c < ny):
            raise LatticeError(f"site {coord} out of range for shape {self.shape}")
        return r * ny + c


@dataclass(frozen=True)
class CouplingTopology:
    """Inter-lattice coupling: full-body (all corresponding sites) or edge-edge.

    kind     : "FB" or "EE"
    lam      : coupling strength between paired sites
    edge_row : for 2D EE, which boundary row carries the contact (default 0);
               ignored for 1D (the contact is the first site) and for FB.
    """

    kind: str
    lam: float
    edge_row: int = 0

    def __post_init__(self):
        if self.kind not in ("EE", "FB"):
            raise LatticeError(f"coupling kind must be 'EE' or 'FB', got {self.kind!r}")


def manhattan_distance(a: tuple[int, ...], b: tuple[int, ...]) -> int:
    """L1 distance between two site coordinates."""
    return sum(abs(x - y) for x, y in zip(a, b))


def build_intra_potential(spec: LatticeSpec) -> np.ndarray:
    """Potential matrix of one lattice: omega^2 on the diagonal, g / dist^alpha off it.

    alpha = inf couples only sites at Manhattan distance 1.  Mirror entries are
    assigned from one computed value, so the result is bit-exactly symmetric.
    """
    coords = spec.site_coords()
    n = spec.n_sites
    v = np.zeros((n, n))
    np.fill_diagonal(v, spec.omega**2)
    nearest_only = math.isinf(spec.alpha)
    for i in range(n):
        for j in range(i + 1, n):
            d = manhattan_distance(coords[i], coords[j])
            if nearest_only:
                if d == 1:
                    v[i, j] = v[j, i] = spec.g
            else:
                v[i, j] = v[j, i] = spec.g / d**spec.alpha
    return v


def build_interaction_potential(
    spec_a: LatticeSpec, spec_b: LatticeSpec, topo: CouplingTopology
) -> np.ndarray:
    """Off-diagonal N_A x N_B block coupling corresponding sites of A and B.

    FB places lam on every site pair (nu, nu); EE only on the interacting
    boundary (1D: the first site; 2D: all sites of topo.edge_row).  The block
    is returned as-is; assemble_total mirrors it into the total matrix.
    """
    if spec_a.dim != spec_b.dim or spec_a.shape != spec_b.shape:
        raise LatticeError(
            f"coupled lattices must have equal shape, got {spec_a.shape!r} and {spec_b.shape!r}"
        )
    n = spec_a.n_sites
    v_int = np.zeros((n, n))
    if topo.kind == "FB":
        np.fill_diagonal(v_int, topo.lam)
        return v_int
    if spec_a.dim == 1:
        v_int[0, 0] = topo.lam
        return v_int
    nx, ny = spec_a.shape
    if not 0 <= topo.edge_row < nx:
        raise LatticeError(f"edge_row {topo.edge_row} out of range for shape {spec_a.shape}")
    for c in range(ny):
        k = topo.edge_row * ny + c
        v_int[k, k] = topo.lam
    return v_int


def assemble_total(v_a: np.ndarray, v_b: np.ndarray, v_int: np.ndarray | None) -> np.ndarray:
    """Total potential [[V_A, V_int], [V_int^T, V_B]]; A sites precede B sites."""
    v_a = np.asarray(v_a, dtype=float)
    v_b = np.asarray(v_b, dtype=float)
    na, nb = v_a.shape[0], v_b.shape[0]
    if v_a.shape != (na, na) or v_b.shape != (nb, nb):
        raise LatticeError("V_A and V_B must be square")
    if v_int is None:
        v_int = np.zeros((na, nb))
    v_int = np.asarray(v_int, dtype=float)
    if v_int.shape != (na, nb):
        raise LatticeError(f"V_int must be {na}x{nb}, got {v_int.shape}")
    total = np.zeros((na + nb, na + nb))
    total[:na, :na] = v_a
    total[na:, na:] = v_b
    total[:na, na:] = v_int
    total[na:, :na] = v_int.T
    return total


def validate_stability(v: np.ndarray) -> float:
    """Smallest eigenvalue of the symmetric potential V.

    The Hamiltonian is stable only for lambda_min > 0; callers should refuse
    to simulate when lambda_min <= 1e-12 * ||V|| (zero-frequency modes have
    divergent thermal covariances).
    """
    v = np.asarray(v, dtype=float)
    if v.ndim != 2 or v.shape[0] != v.shape[1]:
        raise LatticeError("V must be square")
    eigs = np.linalg.eigvalsh(v)
    return float(eigs[0])


def is_stable(v: np.ndarray, rel_tol: float = 1e-12) -> bool:
    """True when the smallest eigenvalue clears the instability tolerance."""
    v = np.asarray(v, dtype=float)
    eigs = np.linalg.eigvalsh(v)
    scale = float(np.max(np.abs(eigs))) if eigs.size else 0.0
    return float(eigs[0]) > rel_tol * scale
