import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from quenchkit.lattice import (
    CouplingTopology,
    LatticeError,
    LatticeSpec,
    assemble_total,
    build_interaction_potential,
    build_intra_potential,
    is_stable,
    manhattan_distance,
    validate_stability,
)
from quenchkit.gaussian import williamson_from_potential


def test_intra_1d_power_law_three_sites():
    spec = LatticeSpec(1, 3, 1.0, 1.0, 1.0)
    v = build_intra_potential(spec)
    np.testing.assert_allclose(v, [[1, 1, 0.5], [1, 1, 1], [0.5, 1, 1]], rtol=0, atol=0)


def test_intra_1d_nearest_neighbor():
    spec = LatticeSpec(1, 3, 2.0, 0.3, math.inf)
    v = build_intra_potential(spec)
    np.testing.assert_allclose(v, [[4, 0.3, 0], [0.3, 4, 0.3], [0, 0.3, 4]], rtol=0, atol=0)


def test_intra_2d_manhattan_corner():
    spec = LatticeSpec(2, (2, 2), 1.0, 0.4, 1.0)
    v = build_intra_potential(spec)
    # row-major: (0,0)->0, (0,1)->1, (1,0)->2, (1,1)->3; corners at distance 2
    assert v[0, 3] == v[3, 0] == 0.4 / 2
    assert v[0, 1] == v[0, 2] == v[1, 3] == v[2, 3] == 0.4
    assert v[1, 2] == 0.4 / 2  # (0,1)-(1,0) also distance 2


def test_built_potentials_bitwise_symmetric():
    for spec in (
        LatticeSpec(1, 17, 1.3, 0.27, 0.5),
        LatticeSpec(2, (4, 5), 0.9, -0.11, 1.75),
    ):
        v = build_intra_potential(spec)
        assert np.array_equal(v, v.T)


def test_alpha_large_matches_nearest_neighbor():
    g = 0.7
    near = build_intra_potential(LatticeSpec(1, 20, 1.0, g, math.inf))
    far = build_intra_potential(LatticeSpec(1, 20, 1.0, g, 60.0))
    dist_one = np.abs(np.subtract.outer(np.arange(20), np.arange(20))) == 1
    np.testing.assert_array_equal(near[dist_one], far[dist_one])
    off = ~dist_one & ~np.eye(20, dtype=bool)
    assert np.max(np.abs(near[off] - far[off])) <= 1e-15 * abs(g)


def test_interaction_fb_diagonal():
    a = LatticeSpec(1, 3, 1.0, 0.1, 1.0)
    v = build_interaction_potential(a, a, CouplingTopology("FB", 0.2))
    np.testing.assert_allclose(v, np.diag([0.2, 0.2, 0.2]))


def test_interaction_ee_1d_first_site():
    a = LatticeSpec(1, 3, 1.0, 0.1, 1.0)
    v = build_interaction_potential(a, a, CouplingTopology("EE", 0.2))
    np.testing.assert_allclose(v, np.diag([0.2, 0.0, 0.0]))


def test_interaction_ee_2d_boundary_row():
    a = LatticeSpec(2, (2, 2), 1.0, 0.1, 1.0)
    v = build_interaction_potential(a, a, CouplingTopology("EE", 0.1))
    np.testing.assert_allclose(v, np.diag([0.1, 0.1, 0.0, 0.0]))
    v1 = build_interaction_potential(a, a, CouplingTopology("EE", 0.1, edge_row=1))
    np.testing.assert_allclose(v1, np.diag([0.0, 0.0, 0.1, 0.1]))


def test_interaction_shape_mismatch():
    a = LatticeSpec(1, 3, 1.0, 0.1, 1.0)
    b = LatticeSpec(1, 4, 1.0, 0.1, 1.0)
    with pytest.raises(LatticeError):
        build_interaction_potential(a, b, CouplingTopology("FB", 0.2))


def test_assemble_blocks_and_single_site_example():
    v = assemble_total(np.array([[1.0]]), np.array([[1.0]]), np.array([[0.5]]))
    np.testing.assert_allclose(v, [[1, 0.5], [0.5, 1]])
    assert np.array_equal(v, v.T)


def test_assemble_zero_interaction_block_diagonal():
    a = build_intra_potential(LatticeSpec(1, 4, 1.2, 0.2, 1.0))
    b = build_intra_potential(LatticeSpec(1, 4, 0.8, 0.1, 2.0))
    v = assemble_total(a, b, None)
    assert np.all(v[:4, 4:] == 0)
    # normal frequencies of the uncoupled total = union of sublattice sets
    w_tot = williamson_from_potential(v).omega
    w_union = np.sort(
        np.concatenate(
            (williamson_from_potential(a).omega, williamson_from_potential(b).omega)
        )
    )
    np.testing.assert_allclose(w_tot, w_union, rtol=1e-12)


def test_validate_stability_examples():
    assert validate_stability(np.array([[1.0, 0.5], [0.5, 1.0]])) == pytest.approx(0.5)
    assert validate_stability(np.array([[1.0, 2.0], [2.0, 1.0]])) == pytest.approx(-1.0)
    assert not is_stable(np.array([[1.0, 2.0], [2.0, 1.0]]))


def test_fig3_scale_assembly_symmetric_and_stable():
    a = LatticeSpec(1, 200, 1.55, 0.16 * 1.55**2, 0.5)
    b = LatticeSpec(1, 200, 1.5, 0.19 * 1.5**2, 0.5)
    v_int = build_interaction_potential(a, b, CouplingTopology("FB", 0.14 * 1.55 * 1.5))
    v = assemble_total(build_intra_potential(a), build_intra_potential(b), v_int)
    assert np.array_equal(v, v.T)
    assert validate_stability(v) > 0
    assert is_stable(v)


@given(
    st.tuples(st.integers(0, 30), st.integers(0, 30)),
    st.tuples(st.integers(0, 30), st.integers(0, 30)),
    st.tuples(st.integers(0, 30), st.integers(0, 30)),
)
def test_manhattan_is_a_metric(a, b, c):
    assert manhattan_distance(a, a) == 0
    assert manhattan_distance(a, b) == manhattan_distance(b, a)
    assert manhattan_distance(a, c) <= manhattan_distance(a, b) + manhattan_distance(b, c)
    if a != b:
        assert manhattan_distance(a, b) > 0


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(dim=3, shape=4, omega=1.0, g=0.1, alpha=1.0),
        dict(dim=1, shape=1, omega=1.0, g=0.1, alpha=1.0),
        dict(dim=2, shape=(1, 5), omega=1.0, g=0.1, alpha=1.0),
        dict(dim=1, shape=5, omega=0.0, g=0.1, alpha=1.0),
        dict(dim=1, shape=5, omega=-1.0, g=0.1, alpha=1.0),
        dict(dim=1, shape=5, omega=1.0, g=0.1, alpha=0.0),
        dict(dim=1, shape=5, omega=1.0, g=0.1, alpha=-2.0),
    ],
)
def test_invalid_specs_rejected(kwargs):
    with pytest.raises(LatticeError):
        LatticeSpec(**kwargs)
