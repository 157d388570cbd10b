import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.spatial import ConvexHull

from underreach.errors import DimensionMismatch, IndexOutOfRange, TooLarge
from underreach.formats import parse_zonotope, zonotope_json
from underreach.zonotope import (
    Zonotope,
    contains_point,
    linear_map,
    minkowski_sum,
    project,
    reduce_sum,
    set_norm,
    support,
    vertices_2d,
    volume,
)

SHEAR = Zonotope([0.0, 0.0], [[1.0, 1.0], [0.0, 1.0]])


def random_zonotope(seed, n=None, p=None):
    rng = np.random.default_rng(seed)
    n = n or int(rng.integers(1, 5))
    p = p if p is not None else int(rng.integers(0, 7))
    return Zonotope(rng.normal(size=n), rng.normal(size=(n, p)))


def unit_dirs(n, count, seed=0):
    D = np.random.default_rng(seed).normal(size=(count, n))
    return D / np.linalg.norm(D, axis=1, keepdims=True)


def brute_hull(Z):
    """Hull vertices from all sign patterns."""
    G = Z.generators
    pts = np.array([Z.center + G @ np.array(s)
                    for s in itertools.product([-1.0, 1.0], repeat=G.shape[1])])
    return pts[ConvexHull(pts).vertices]


def test_construction_and_properties():
    Z = Zonotope([1.0, 2.0], [[1.0, 0.0, 0.0], [0.0, 0.0, 2.0]])
    assert Z.dim == 2
    assert Z.gen_count == 2  # zero column dropped
    assert Z.order == 1.0
    assert Z.is_full_dim()
    assert not Zonotope.origin(3).is_full_dim()
    assert Zonotope.point([1.0, 2.0]).is_point
    with pytest.raises(ValueError):
        Zonotope([1.0, np.nan])
    with pytest.raises(DimensionMismatch):
        Zonotope([0.0, 0.0], [[1.0, 0.0]])


def test_arrays_are_read_only():
    Z = Zonotope.unit_box(2)
    with pytest.raises(ValueError):
        Z.center[0] = 3.0
    with pytest.raises(ValueError):
        Z.generators[0, 0] = 3.0


def test_box_constructor():
    Z = Zonotope.box([0.0, -1.0], [1.0, 3.0])
    assert np.allclose(Z.center, [0.5, 1.0])
    assert np.allclose(Z.generators, np.diag([0.5, 2.0]))


def test_set_norm_examples():
    assert set_norm(Zonotope([0.0, 0.0], np.eye(2))) == 1.0
    assert set_norm(Zonotope([1.0, 2.0], np.eye(2))) == 3.0
    assert set_norm(SHEAR) == 2.0


def test_set_norm_is_max_over_sign_patterns():
    for seed in range(20):
        Z = random_zonotope(seed, p=4)
        brute = max(np.max(np.abs(Z.center + Z.generators @ np.array(s)))
                    for s in itertools.product([-1.0, 1.0], repeat=4))
        assert set_norm(Z) == pytest.approx(brute, rel=1e-12)


def test_support_examples():
    assert support(Zonotope.unit_box(2), [1.0, 0.0]) == 1.0
    assert support(SHEAR, [0.0, 0.0]) == 0.0
    Z = Zonotope([1.0, 0.0], [[1.0, 1.0], [0.0, 1.0]])
    assert support(Z, [1.0, 1.0]) == 4.0
    assert np.allclose(support(Z, np.array([[1.0, 1.0], [1.0, 0.0]])), [4.0, 3.0])
    with pytest.raises(DimensionMismatch):
        support(Z, [1.0, 0.0, 0.0])


@settings(max_examples=60)
@given(st.integers(0, 100_000))
def test_support_commutes_with_map_and_sum(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 5))
    Z1, Z2 = random_zonotope(seed, n), random_zonotope(seed + 1, n)
    L = rng.normal(size=(n, n))
    D = unit_dirs(n, 20, seed)
    lhs = support(linear_map(L, Z1), D)
    assert np.allclose(lhs, support(Z1, D @ L), rtol=1e-12, atol=1e-12)
    assert np.allclose(support(Z1 + Z2, D), support(Z1, D) + support(Z2, D), rtol=1e-12, atol=1e-12)
    assert np.allclose(support(minkowski_sum(Z1, Z2), D), support(Z1 + Z2, D))
    assert set_norm(Z1 + Z2) <= set_norm(Z1) + set_norm(Z2) + 1e-12
    assert np.max(np.abs(Z1.center)) <= set_norm(Z1) + 1e-12
    if Z1.gen_count:
        assert np.max(np.sum(np.abs(Z1.generators), axis=1)) <= 2 * set_norm(Z1) + 1e-12


def test_operators():
    Z = Zonotope([1.0, 2.0], np.eye(2))
    assert np.allclose((Z + np.array([1.0, 1.0])).center, [2.0, 3.0])
    assert np.allclose((-Z).center, [-1.0, -2.0])
    M = np.array([[0.0, 1.0], [1.0, 0.0]])
    assert np.allclose((M @ Z).center, [2.0, 1.0])
    assert np.allclose(Z.scale_generators(0.5).generators, 0.5 * np.eye(2))


def test_reduce_sum_examples():
    box = Zonotope.unit_box(2)
    assert reduce_sum(box, 1) is box
    Z = Zonotope([0.0, 0.0], [[1.0, 0.0, 0.1], [0.0, 1.0, 0.1]])
    R = reduce_sum(Z, 1)
    assert R.gen_count == 2
    assert np.allclose(R.generators, [[1.0, 0.1], [0.0, 1.1]])
    D = unit_dirs(2, 64)
    assert np.all(support(R, D) <= support(Z, D) + 1e-12)


@settings(max_examples=40)
@given(st.integers(0, 100_000), st.sampled_from([1, 1.5, 2, 3]))
def test_reduce_sum_is_inner(seed, order):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 5))
    Z = Zonotope(rng.normal(size=n), rng.normal(size=(n, int(rng.integers(0, 20)))))
    R = reduce_sum(Z, order)
    assert R.gen_count <= max(order * n, 1)
    D = unit_dirs(n, 1000, seed)
    assert np.all(support(R, D) <= support(Z, D) + 1e-12)


def test_volume_examples():
    assert volume(Zonotope.unit_box(2)) == pytest.approx(4.0)
    assert volume(Zonotope([0.0, 0.0], 2 * np.eye(2))) == pytest.approx(16.0)
    assert volume(SHEAR) == pytest.approx(4.0)
    assert volume(Zonotope([0.0, 0.0], [[1.0], [1.0]])) == 0.0
    with pytest.raises(TooLarge):
        volume(Zonotope.unit_box(7))


def test_volume_matches_hull_and_scaling():
    for seed in range(10):
        Z = random_zonotope(seed, n=2, p=5)
        assert volume(Z) == pytest.approx(ConvexHull(brute_hull(Z)).volume, rel=1e-9)
        Z3 = random_zonotope(seed, n=3, p=5)
        assert volume(linear_map(2 * np.eye(3), Z3)) == pytest.approx(8 * volume(Z3), rel=1e-12)


def test_project_examples():
    assert project(SHEAR, (0, 1)) == SHEAR
    P = project(Zonotope([1.0, 2.0, 3.0], np.eye(3)), (0, 2))
    assert np.allclose(P.center, [1.0, 3.0])
    assert np.allclose(P.generators, np.eye(2))
    with pytest.raises(IndexOutOfRange):
        project(SHEAR, (0, 2))
    Z = random_zonotope(3, n=4, p=5)
    D = unit_dirs(2, 30)
    lifted = np.zeros((30, 4))
    lifted[:, [1, 3]] = D
    assert np.allclose(support(project(Z, (1, 3)), D), support(Z, lifted))


def test_vertices_unit_box():
    V = vertices_2d(Zonotope.unit_box(2))
    assert len(V) == 4
    assert {tuple(v) for v in np.round(V, 12)} == {(1, 1), (1, -1), (-1, 1), (-1, -1)}


def test_vertices_two_generators_give_parallelogram():
    V = vertices_2d(SHEAR)
    assert len(V) == 4
    assert {tuple(v) for v in np.round(V, 12)} == {(2, 1), (0, 1), (-2, -1), (0, -1)}


def test_vertices_point_and_segment():
    assert np.allclose(vertices_2d(Zonotope.point([1.0, 2.0])), [[1.0, 2.0]])
    assert len(vertices_2d(Zonotope([0.0, 0.0], [[1.0, 2.0], [1.0, 2.0]]))) == 2


@settings(max_examples=40)
@given(st.integers(0, 100_000))
def test_vertices_match_brute_force_hull(seed):
    rng = np.random.default_rng(seed)
    Z = Zonotope(rng.normal(size=2), rng.normal(size=(2, int(rng.integers(2, 7)))))
    V = vertices_2d(Z)
    H = brute_hull(Z)
    assert len(V) == len(H)
    for h in H:
        assert np.min(np.linalg.norm(V - h, axis=1)) < 1e-9
    # counter-clockwise orientation
    x, y = V[:, 0], V[:, 1]
    assert 0.5 * np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y) > 0
    D = unit_dirs(2, 100, seed)
    assert np.allclose(np.max(D @ V.T, axis=1), support(Z, D), atol=1e-9)


def test_contains_point():
    Z = Zonotope.unit_box(2)
    assert contains_point(Z, [0.5, -0.5])
    assert contains_point(Z, [1.0, 1.0])
    assert not contains_point(Z, [1.01, 0.0])
    assert contains_point(SHEAR, [2.0, 1.0])
    assert not contains_point(SHEAR, [2.0, -1.0])
    assert contains_point(Zonotope.point([1.0, 1.0]), [1.0, 1.0])
    flat = Zonotope([0.0, 0.0], [[1.0], [1.0]])
    assert contains_point(flat, [0.5, 0.5])
    assert not contains_point(flat, [0.5, 0.4])


def test_json_round_trip_bit_identical():
    import json

    rng = np.random.default_rng(4)
    Z = Zonotope(rng.normal(size=3) / 7, rng.normal(size=(3, 4)) / 3)
    back = parse_zonotope(json.loads(zonotope_json(Z)))
    assert np.array_equal(back.center, Z.center)
    assert np.array_equal(back.generators, Z.generators)
    assert Zonotope.from_dict(Z.to_dict()) == Z
