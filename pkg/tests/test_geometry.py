import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from glscatter.geometry import (
    ConvexRegion,
    GeometryError,
    LorentzMap,
    WarpingMatrix,
    Wedge,
    metric,
    minkowski_dot,
    precursor,
    precursor_covariance_check,
    random_lorentz,
    standard_warping,
    warping_for_wedge,
)

finite = st.floats(-5, 5, allow_nan=False)
vec4 = st.lists(finite, min_size=4, max_size=4)


def test_minkowski_dot_examples():
    assert minkowski_dot([1, 0], [0, 1]) == 0
    assert minkowski_dot([2, 1], [1, 1]) == 1
    assert minkowski_dot([1, 2, 3, 4], [1, 1, 1, 1]) == 1 - 2 - 3 - 4


def test_minkowski_dot_dimension_mismatch():
    with pytest.raises(Exception):
        minkowski_dot([1, 0], [1, 0, 0])


def test_standard_warping_examples():
    np.testing.assert_array_equal(standard_warping(2, 1.0).matrix, [[0, 1], [1, 0]])
    np.testing.assert_array_equal(standard_warping(4, 0.0, 0.0).matrix, np.zeros((4, 4)))
    expected = [[0, 2, 0, 0], [2, 0, 0, 0], [0, 0, 0, 3], [0, 0, -3, 0]]
    np.testing.assert_array_equal(standard_warping(4, 2.0, 3.0).matrix, expected)


def test_standard_warping_errors():
    with pytest.raises(GeometryError):
        standard_warping(2, 1.0, 0.5)
    with pytest.raises(GeometryError):
        standard_warping(3, -1.0)
    with pytest.raises(GeometryError):
        WarpingMatrix(np.eye(2))


def test_lorentz_validation():
    with pytest.raises(GeometryError):
        LorentzMap(np.diag([1.0, -1.0]))  # improper
    with pytest.raises(GeometryError):
        LorentzMap(np.diag([-1.0, -1.0]))  # not orthochronous
    with pytest.raises(GeometryError):
        LorentzMap(np.array([[1.0, 0.1], [0.0, 1.0]]))


def test_warping_for_wedge_examples():
    q0 = standard_warping(4, 1.5, 0.7)
    assert np.array_equal(warping_for_wedge(Wedge.right(4), q0).matrix, q0.matrix)
    rot = LorentzMap.rotation(4, np.pi, (1, 2))
    q = warping_for_wedge(Wedge(rot), q0).matrix
    # conjugation by diag(1,-1,-1,1) flips the kappa block and the eta block
    oracle = np.diag([1, -1, -1, 1]) @ q0.matrix @ np.diag([1, -1, -1, 1])
    np.testing.assert_allclose(q, oracle, atol=1e-15)
    np.testing.assert_allclose(q[:2, :2], -q0.matrix[:2, :2], atol=1e-15)
    boost = LorentzMap.boost(2, 0.8)
    q2 = standard_warping(2, 1.0)
    np.testing.assert_allclose(warping_for_wedge(Wedge(boost), q2).matrix, q2.matrix, atol=1e-14)


def test_complement_negates_warping(q1):
    w = Wedge(LorentzMap.boost(2, 0.3))
    np.testing.assert_array_equal(warping_for_wedge(w.complement(), q1).matrix, -warping_for_wedge(w, q1).matrix)
    back = w.complement().complement()
    assert back.sign == w.sign and np.array_equal(back.boost.matrix, w.boost.matrix)


def test_translation_ignored(q1):
    w = Wedge(LorentzMap.identity(2), [3.0, -1.0])
    np.testing.assert_array_equal(warping_for_wedge(w, q1).matrix, q1.matrix)
    assert np.array_equal(w.centered().translation, [0.0, 0.0])


def test_precursor_examples(wr):
    left = ConvexRegion(np.array([[1, 0.1], [1, 0.2]]))
    right = ConvexRegion(np.array([[1, 0.5], [1, 0.6]]))
    assert precursor(left, right, wr)
    assert not precursor(left, left, wr)
    assert not precursor(right, left, wr)


def test_precursor_margin(wr):
    left = ConvexRegion(np.array([[1, 0.1]]))
    right = ConvexRegion(np.array([[1, 0.2]]))
    assert precursor(left, right, wr, 0.05)
    assert not precursor(left, right, wr, 0.2)
    with pytest.raises(GeometryError):
        precursor(left, right, wr, -1.0)


def test_convex_region_hull_reduction():
    pts = np.array([[0, 0], [1, 0], [0, 1], [1, 1], [0.5, 0.5]])
    assert len(ConvexRegion(pts).vertices) == 4
    seg = np.array([[1, 0.1], [1, 0.15], [1, 0.2]])
    assert len(ConvexRegion(seg).vertices) == 2
    with pytest.raises(Exception):
        ConvexRegion(np.zeros((0, 2)))


@settings(max_examples=60, deadline=None)
@given(vec4, vec4, st.floats(0, 3), st.floats(-3, 3))
def test_antisymmetry_property(p, q, kappa, eta):
    Q = standard_warping(4, kappa, eta)
    assert abs(minkowski_dot(p, Q.apply(q)) + minkowski_dot(Q.apply(p), q)) <= 1e-13 * max(1.0, kappa + abs(eta)) * 25
    assert abs(minkowski_dot(p, Q.apply(p))) <= 1e-12


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 4), st.integers(0, 2**32 - 1))
def test_group_action_property(d, seed):
    rng = np.random.default_rng(seed)
    q0 = standard_warping(d, 1.3, 0.4 if d == 4 else None)
    l1, l2 = random_lorentz(d, rng), random_lorentz(d, rng)
    w = Wedge.right(d)
    lhs = warping_for_wedge(w.transform(l1).transform(l2), q0).matrix
    comp = (l2 @ l1)
    rhs = comp.matrix @ q0.matrix @ comp.inverse().matrix
    assert np.max(np.abs(lhs - rhs)) <= 1e-12 * max(1.0, np.max(np.abs(rhs)))


@settings(max_examples=100, deadline=None)
@given(st.integers(2, 4), st.integers(0, 2**32 - 1))
def test_precursor_covariance_property(d, seed):
    rng = np.random.default_rng(seed)
    left = ConvexRegion(rng.normal(size=(3, d)) * 0.3)
    shift = np.zeros(d)
    shift[1] = rng.uniform(-1, 2)
    right = ConvexRegion(rng.normal(size=(3, d)) * 0.3 + shift)
    w = Wedge(random_lorentz(d, rng, 0.5))
    lam = random_lorentz(d, rng)
    assert precursor_covariance_check(left, right, w, LorentzMap.identity(d))
    assert precursor_covariance_check(left, right, w, LorentzMap.identity(d), rng.normal(size=d))
    assert precursor_covariance_check(left, right, w, lam, rng.normal(size=d), 1e-9)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_precursor_transitive_and_reversal(seed):
    rng = np.random.default_rng(seed)
    w = Wedge.right(2)
    regions = [ConvexRegion(np.c_[np.ones(2), rng.uniform(-1, 1, 2)]) for _ in range(3)]
    a, b, c = regions
    if precursor(a, b, w, 1e-9) and precursor(b, c, w, 1e-9):
        assert precursor(a, c, w, 1e-9)
    assert precursor(a, b, w, 1e-9) == precursor(b, a, w.complement(), 1e-9)


def test_metric_and_inverse():
    lam = LorentzMap.boost(3, 0.7) @ LorentzMap.rotation(3, 0.4)
    g = metric(3)
    np.testing.assert_allclose(lam.matrix.T @ g @ lam.matrix, g, atol=1e-13)
    np.testing.assert_allclose((lam @ lam.inverse()).matrix, np.eye(3), atol=1e-13)
