import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from glscatter.deformation import (
    OrderedMap,
    compose_deformed_smatrix,
    deformed_chain,
    deformed_tensor,
    free_smatrix,
    gl_smatrix,
    mixed_associativity_witness,
    pair_table,
    pairwise_factorization_residual,
    phase_map,
    reversal_map,
    s_q,
    transition_free,
    tuple_phase,
    wedge_swap_check,
)
from glscatter.fock import FockSpace, FockVector, ModeSet, ordered_basis, tensor
from glscatter.geometry import LorentzMap, WarpingMatrix, Wedge, standard_warping, warping_for_wedge
from glscatter.scattering import wave_operator_deformed

MOMENTA = [-1.0, -0.3, 0.4, 1.2]


def _random_state(space, rng, sectors):
    secs = [np.zeros(space.sector_dim(n), dtype=complex) for n in space.sectors()]
    for n in sectors:
        secs[n] = rng.normal(size=space.sector_dim(n)) + 1j * rng.normal(size=space.sector_dim(n))
    return FockVector(space, tuple(secs))


def test_pair_phase_example():
    space = FockSpace(ModeSet(2, 1.0, [1.0, -1.0]), 2)
    Q = standard_warping(2, 1.0)
    G = pair_table(space, Q)
    assert G[0, 1] == pytest.approx(-2 * math.sqrt(2), abs=1e-15)
    e1, e2 = FockVector.basis(space, (0,)), FockVector.basis(space, (1,))
    amp = deformed_tensor(e1, e2, Q).sector(2)[space.index((0, 1))]
    assert amp == pytest.approx(np.exp(-2j * math.sqrt(2)), abs=1e-15)


def test_deformed_tensor_examples(space3, q1, rng):
    psi = _random_state(space3, rng, [1])
    phi = _random_state(space3, rng, [1])
    plain = tensor(psi, phi)
    assert (deformed_tensor(psi, phi, WarpingMatrix.zero(2)) - plain).norm() == 0.0
    omega = FockVector.vacuum(space3, "unordered")
    assert (deformed_tensor(psi, omega, q1) - psi).norm() == 0.0
    assert (deformed_tensor(omega, psi, q1) - psi).norm() == 0.0


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0.0, 5.0))
def test_deformed_tensor_associative(seed, kappa):
    rng = np.random.default_rng(seed)
    space = FockSpace(ModeSet(2, 1.0, MOMENTA), 3)
    Q = standard_warping(2, kappa)
    a, b, c = (_random_state(space, rng, [0, 1]) for _ in range(3))
    lhs = deformed_tensor(deformed_tensor(a, b, Q), c, Q)
    rhs = deformed_tensor(a, deformed_tensor(b, c, Q), Q)
    assert (lhs - rhs).norm() <= 1e-13 * max(1.0, lhs.norm())


def test_mixed_associativity_fails(space3, q1):
    # mixing deformed and plain products is not associative
    assert mixed_associativity_witness(space3, q1) > 0.1
    assert mixed_associativity_witness(space3, WarpingMatrix.zero(2)) == 0.0


def test_s_q_examples(space3, q1):
    S = s_q(space3, q1)
    assert np.all(S.values[1] == 1.0) and np.all(S.values[0] == 1.0)
    assert S.H.distance(s_q(space3, -q1)) <= 1e-15
    assert (S @ S).distance(s_q(space3, 2 * q1)) <= 1e-13


@settings(max_examples=30, deadline=None)
@given(st.floats(-5, 5), st.floats(-5, 5))
def test_s_q_additive_and_unitary(k1, k2):
    space = FockSpace(ModeSet(2, 1.0, MOMENTA), 3)
    Q1, Q2 = standard_warping(2, abs(k1)), standard_warping(2, abs(k2))
    lhs = s_q(space, Q1) @ s_q(space, Q2)
    assert lhs.distance(s_q(space, Q1 + Q2)) <= 1e-12
    for v in s_q(space, Q1).values:
        assert np.max(np.abs(np.abs(v) - 1.0)) <= 1e-15


def test_s_q_preserves_ordered_bases(space3, q1, wr):
    for n in (2, 3):
        for direction in ("out", "in"):
            tuples = ordered_basis(space3, wr, direction, n)
            v = FockVector.from_sector(space3, n, np.isin(np.arange(space3.sector_dim(n)), [space3.index(t) for t in tuples]))
            out = s_q(space3, q1).apply(v)
            assert set(out.support(n)) == set(tuples)


def test_gl_smatrix_examples(space3, wr):
    Q0 = standard_warping(2, 1.0)
    zero = gl_smatrix(space3, wr, "opposite", WarpingMatrix.zero(2), 3)
    assert np.array_equal(zero.matrix, np.eye(len(zero.cols)))
    two = gl_smatrix(space3, wr, "opposite", Q0, 2)
    k = space3.modes.on_shell
    for j, (a, b) in enumerate(two.cols):
        p1, p2 = k[a], k[b]
        expected = np.exp(2j * 1.0 * (p1[0] * p2[1] - p1[1] * p2[0]))
        assert two.matrix[j, j] == pytest.approx(expected, abs=1e-14)
    three = gl_smatrix(space3, wr, "opposite", Q0, 3)
    for j, t in enumerate(three.cols):
        pairs = [two.matrix[two.cols.index(tuple(p)), two.cols.index(tuple(p))] for p in itertools.combinations(t, 2)]
        assert abs(three.matrix[j, j] - np.prod(pairs)) <= 1e-13
    same = gl_smatrix(space3, wr, "same", Q0, 2)
    assert set(same.rows) == {tuple(reversed(c)) for c in same.cols}
    with pytest.raises(ValueError):
        gl_smatrix(space3, wr, "sideways", Q0, 2)


def test_free_smatrix_is_reversal(space3, wr):
    for n in (1, 2, 3):
        S0 = free_smatrix(space3, wr, wr, n)
        assert S0.distance(reversal_map(S0.cols)) <= 1e-14
        opp = free_smatrix(space3, wr.complement(), wr, n)
        assert opp.distance(OrderedMap(opp.cols, opp.cols, np.eye(len(opp.cols)))) <= 1e-14


def test_compose_examples(space3, wr):
    Q0 = standard_warping(2, 1.0)
    for n in (2, 3):
        S0 = free_smatrix(space3, wr.complement(), wr, n)
        assert compose_deformed_smatrix(space3, S0, wr.complement(), wr, Q0).distance(
            gl_smatrix(space3, wr, "opposite", Q0, n)
        ) <= 1e-13
        S0s = free_smatrix(space3, wr, wr, n)
        assert compose_deformed_smatrix(space3, S0s, wr, wr, Q0).distance(gl_smatrix(space3, wr, "same", Q0, n)) <= 1e-13
        assert compose_deformed_smatrix(space3, S0s, wr, wr, WarpingMatrix.zero(2)).distance(S0s) == 0.0


def _transition_cases():
    # d = 2: transition to the complement; d = 3: transition to a rotated wedge
    s2 = FockSpace(ModeSet(2, 1.0, MOMENTA), 3)
    yield s2, Wedge.right(2), Wedge.right(2).complement(), standard_warping(2, 1.0)
    k3 = np.array([[0.9, 0.1], [0.2, -0.1], [-0.6, 0.3], [-0.1, 0.8]])
    s3 = FockSpace(ModeSet(3, 1.0, k3), 3)
    yield s3, Wedge.right(3), Wedge(LorentzMap.rotation(3, 0.5, (1, 2))), standard_warping(3, 1.5)
    yield s3, Wedge.right(3), Wedge.right(3), standard_warping(3, 1.5)


@pytest.mark.parametrize("space,W1,W2,Q0", list(_transition_cases()))
def test_wedge_transition_against_wave_operators(space, W1, W2, Q0):
    for n in (1, 2, 3):
        S0 = transition_free(space, W2, W1, n)
        composed = compose_deformed_smatrix(space, S0, W2, W1, Q0)
        w1 = wave_operator_deformed(space, W1, "out", Q0, n)
        w2 = wave_operator_deformed(space, W2, "out", Q0, n)
        if not w1.cols or not w2.cols:
            continue
        direct = OrderedMap(w2.cols, w1.cols, w2.matrix.conj().T @ w1.matrix)
        assert composed.distance(direct) <= 1e-13


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_factorization_and_unitarity_sweep(seed):
    rng = np.random.default_rng(seed)
    M = int(rng.integers(3, 7))
    space = FockSpace(ModeSet(2, 1.0, np.sort(rng.uniform(-3, 3, M)) + np.arange(M) * 1e-3), min(M, 4))
    W = Wedge(LorentzMap.boost(2, rng.uniform(-1, 1)))
    Q0 = standard_warping(2, rng.uniform(0, 10))
    for n in range(1, space.n_max + 1):
        S = gl_smatrix(space, W, "opposite", Q0, n)
        assert S.unitarity_residual() <= 1e-12
        assert gl_smatrix(space, W, "same", Q0, n).unitarity_residual() <= 1e-12
        assert pairwise_factorization_residual(space, 2 * warping_for_wedge(W, Q0), list(S.cols)) <= 1e-13


def test_wedge_swap_examples(space3, wr):
    for n in (1, 2, 3):
        r = wedge_swap_check(space3, wr, n)
        assert r["bijective"] and r["deviation"] <= 1e-13
        assert r["count"] == math.comb(space3.M, n)
    assert wedge_swap_check(space3, wr, 1)["deviation"] == 0.0


def test_deformed_chain_is_phase_route(space3, q1, rng):
    amps = [rng.normal(size=space3.M) + 1j * rng.normal(size=space3.M) for _ in range(3)]
    chain = deformed_chain([FockVector.one_particle(space3, a) for a in amps], q1)
    direct = s_q(space3, q1).apply(FockVector.product(space3, amps))
    assert (chain - direct).norm() <= 1e-13 * direct.norm()


def test_tuple_phase_sum():
    G = np.arange(16.0).reshape(4, 4)
    assert tuple_phase(G, (0, 2, 3)) == G[0, 2] + G[0, 3] + G[2, 3]
    assert tuple_phase(G, (1,)) == 0.0


def test_ordered_map_checks():
    m = OrderedMap([(0, 1)], [(1, 0)], np.eye(1))
    with pytest.raises(ValueError):
        m @ m
    with pytest.raises(ValueError):
        OrderedMap([(0,)], [(1,), (2,)], np.eye(1))
    with pytest.raises(ValueError):
        m.distance(OrderedMap([(2, 3)], [(1, 0)], np.eye(1)))
    assert phase_map(FockSpace(ModeSet(2, 1.0, MOMENTA), 2), WarpingMatrix.zero(2), [(0, 1)]).unitarity_residual() == 0.0
