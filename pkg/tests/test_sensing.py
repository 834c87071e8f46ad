import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from uavslice.sensing import gathered_information, marginal_information, max_information

L, RHO = 1e6, 100.0


def three_user_expansion(pos, L, rho):
    """Constructive credit written out term by term, independent of the library code."""
    total = 0.0
    for i in range(len(pos)):
        if i == 0:
            total += L
            continue
        nearest = min(float(np.hypot(*(pos[i] - pos[j]))) for j in range(i))
        total += L * (1 - 1 / (nearest / rho + 1))
    return total


def test_single_user():
    assert max_information([[5.0, 5.0]], L, RHO) == L


def test_two_users_at_rho():
    assert max_information([[0.0, 0.0], [RHO, 0.0]], L, RHO) == 1.5 * L


def test_coincident_pair():
    assert max_information([[3.0, 4.0], [3.0, 4.0]], L, RHO) == L


def test_empty():
    assert max_information(np.zeros((0, 2)), L, RHO) == 0.0
    assert gathered_information(np.zeros(3, bool), np.ones((3, 2)), L, RHO) == 0.0


def test_all_active_equals_max():
    pos = np.random.default_rng(1).uniform(0, 500, (6, 2))
    assert gathered_information(np.ones(6, bool), pos, L, RHO) == max_information(pos, L, RHO)


def test_subset_at_three_rho():
    pos = np.array([[0.0, 0.0], [50.0, 50.0], [3 * RHO, 0.0]])
    assert gathered_information([True, False, True], pos, L, RHO) == pytest.approx(1.75 * L, rel=1e-15)


def test_marginal_examples():
    pos = np.array([[0.0, 0.0], [RHO, 0.0], [0.0, 0.0]])
    assert marginal_information([False] * 3, 1, pos, L, RHO) == L
    assert marginal_information([True, False, False], 2, pos, L, RHO) == 0.0
    assert marginal_information([True, False, False], 1, pos, L, RHO) == pytest.approx(0.5 * L)
    with pytest.raises(ValueError):
        marginal_information([True, False, False], 0, pos, L, RHO)


def test_length_mismatch():
    with pytest.raises(ValueError):
        gathered_information([True], np.zeros((2, 2)), L, RHO)


def test_out_of_order_activation_can_lose_information():
    # A lower-indexed user at the centre of a triangle of active users takes the
    # full L itself and shrinks the credit of the three outer users.
    r = 10.0
    outer = [[r * np.cos(a), r * np.sin(a)] for a in (0, 2 * np.pi / 3, 4 * np.pi / 3)]
    pos = np.array([[0.0, 0.0], *outer])
    act = np.array([False, True, True, True])
    assert marginal_information(act, 0, pos, L, 1000.0) < 0


@settings(max_examples=200, deadline=None)
@given(n=st.integers(1, 10), seed=st.integers(0, 2**32 - 1), rho=st.sampled_from([1.0, 10.0, 100.0, 1000.0]))
def test_batch_matches_expansion(n, seed, rho):
    pos = np.random.default_rng(seed).uniform(0, 1200, (n, 2))
    assert max_information(pos, L, rho) == pytest.approx(three_user_expansion(pos, L, rho), rel=1e-12)
    assert max_information(pos, L, rho) <= n * L


@settings(max_examples=200, deadline=None)
@given(n=st.integers(1, 10), seed=st.integers(0, 2**32 - 1))
def test_index_order_appends_are_monotone_and_incremental(n, seed):
    g = np.random.default_rng(seed)
    pos = g.uniform(0, 1200, (n, 2))
    chosen = np.sort(g.choice(n, size=g.integers(1, n + 1), replace=False))
    act = np.zeros(n, bool)
    running = 0.0
    for c in chosen:
        gain = marginal_information(act, c, pos, L, RHO)
        assert gain >= 0
        act[c] = True
        running += gain
    assert running == pytest.approx(gathered_information(act, pos, L, RHO), rel=1e-9)


def test_brute_force_subsets():
    pos = np.random.default_rng(7).uniform(0, 400, (5, 2))
    for bits in itertools.product([False, True], repeat=5):
        act = np.array(bits)
        expect = three_user_expansion(pos[act], L, RHO) if act.any() else 0.0
        assert gathered_information(act, pos, L, RHO) == pytest.approx(expect, rel=1e-12)
