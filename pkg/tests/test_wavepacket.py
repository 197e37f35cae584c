import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from glscatter.geometry import LorentzMap, Wedge
from glscatter.wavepacket import (
    KGSolution,
    MomentumProfile,
    ProfileDomainError,
    ResolutionError,
    TabulatedProfile,
    decay_scan,
    decay_slope,
    dispersion,
    evaluate,
    kg_residual,
    on_shell,
    ordered,
    point_velocity_support,
    rescale_to_frame,
    velocity,
    velocity_support,
)


def test_dispersion_examples():
    assert dispersion(1.0, 0.0) == 1.0
    assert dispersion(1.0, [1.0]) == pytest.approx(math.sqrt(2), abs=1e-15)
    assert dispersion(2.0, [0.0, 0.0]) == 2.0
    with pytest.raises(ValueError):
        dispersion(0.0, 1.0)


def test_velocity_examples():
    assert velocity(1.0, [0.0])[0] == 0.0
    assert velocity(1.0, [1.0])[0] == pytest.approx(1 / math.sqrt(2), abs=1e-15)


@settings(max_examples=80, deadline=None)
@given(st.lists(st.floats(-20, 20), min_size=1, max_size=3), st.floats(0.1, 5))
def test_on_shell_property(k, m):
    p = on_shell(m, k)
    assert abs(p[0] ** 2 - np.sum(p[1:] ** 2) - m * m) <= 1e-12 * max(1.0, p[0] ** 2)
    assert np.all(np.abs(velocity(m, k)) < 1)


def test_velocity_support_box():
    f = KGSolution(TabulatedProfile([[0.1], [0.2]], [1.0, 1.0]), 1.0)
    v = velocity_support(f).region.vertices
    assert np.allclose(v[:, 0], 1.0)
    assert v[:, 1].min() == pytest.approx(0.09950371902099892, abs=1e-15)
    assert v[:, 1].max() == pytest.approx(0.19611613513818404, abs=1e-15)


def test_velocity_support_point_and_boost():
    k0 = np.array([0.4])
    vs = point_velocity_support(1.0, k0).region.vertices
    assert np.allclose(vs, [[1.0, velocity(1.0, k0)[0]]], atol=1e-15)
    lam = LorentzMap.boost(2, 0.6)
    boosted = point_velocity_support(1.0, k0, lam).region.vertices[0]
    # oracle: intersect the ray through p with the hyperplane lam(T_1) = {x : (lam^-1 x)^0 = 1}
    p = on_shell(1.0, k0)
    c = np.linalg.solve(lam.matrix, p)[0]
    assert np.allclose(boosted, p / c, atol=1e-14)
    assert np.allclose(rescale_to_frame(p, LorentzMap.identity(2)), [1.0, velocity(1.0, k0)[0]])


def _point(k, m=1.0):
    return KGSolution(TabulatedProfile([[k]], [1.0]), m)


def test_ordered_examples():
    W = Wedge.right(2)
    # velocities 0.6 and 0.1
    k6, k1 = 0.6 / math.sqrt(1 - 0.36), 0.1 / math.sqrt(1 - 0.01)
    fs = [_point(k6), _point(k1)]
    assert ordered(fs, W, direction="out")
    assert not ordered(fs, W, direction="in")
    assert ordered(fs[::-1], W, direction="in")
    assert ordered(fs[:1], W, direction="out") and ordered(fs[:1], W, direction="in")
    with pytest.raises(ValueError):
        ordered(fs, W, direction="sideways")


def test_ordered_overlapping_supports():
    W = Wedge.right(2)
    a = KGSolution(MomentumProfile([0.5], 0.3), 1.0)
    b = KGSolution(MomentumProfile([0.3], 0.3), 1.0)
    assert not ordered([a, b], W, direction="out")
    assert not ordered([a, b], W, direction="in")


def test_evaluate_origin_is_integral():
    f = KGSolution(MomentumProfile([0.0], 1.0), 1.0)
    val = evaluate(f, 0.0, [0.0], 4096)
    from scipy.integrate import quad

    oracle = quad(lambda k: math.exp(-1 / (1 - k * k)), -1, 1)[0] / (2 * math.pi)
    assert val.imag == 0.0
    assert val.real == pytest.approx(oracle, rel=1e-9)


def test_evaluate_resolution_errors():
    f = KGSolution(MomentumProfile([0.0], 1.0), 1.0)
    with pytest.raises(ResolutionError):
        evaluate(f, 0.0, [0.0], 8)
    with pytest.raises(ResolutionError):
        evaluate(f, 5000.0, [0.0], 64)


def test_tabulated_profile_domain():
    prof = TabulatedProfile([[0.1], [0.2]], [1.0, 2.0])
    assert prof(np.array([0.2])) == 2.0
    with pytest.raises(ProfileDomainError):
        prof(np.array([0.15]))


def test_kg_residual_second_order():
    f = KGSolution(MomentumProfile([0.3], 0.5), 1.0)
    r1 = abs(kg_residual(f, 1.0, [0.5], 0.1, 512))
    r2 = abs(kg_residual(f, 1.0, [0.5], 0.05, 512))
    assert r2 < r1
    assert 3.0 < r1 / r2 < 5.0


def test_decay_scan_rows_and_validation():
    f = KGSolution(MomentumProfile([0.0], 1.0), 1.0)
    rows = decay_scan(f, [3.0], [10.0, 20.0, 40.0], 1024)
    assert rows.shape == (3, 2)
    assert np.all(np.diff(rows[:, 1]) < 0)
    with pytest.raises(ValueError):
        decay_scan(f, [3.0], [20.0, 10.0])


def test_decay_slope_on_power_law():
    taus = np.geomspace(10, 100, 12)
    rows = np.c_[taus, 7.0 * taus ** -2.5]
    assert decay_slope(rows) == pytest.approx(-2.5, abs=1e-12)
