import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from promrep import viterbi
from promrep.errors import BatchDecodeError, DegenerateInputError, InvalidArgument


def oracle(emissions, transition, initial=None):
    """Enumerate every path with itertools, scoring in decoder order.

    Ties go to the path that is smallest compared from the last frame back.
    """
    T, Q = emissions.shape
    init = np.full(Q, -math.log(Q)) if initial is None else initial
    trans = transition.dense()
    best, best_key, best_path = -math.inf, None, None
    for path in itertools.product(range(Q), repeat=T):
        score = init[path[0]] + emissions[0, path[0]]
        for t in range(1, T):
            score = (score + trans[path[t - 1], path[t]]) + emissions[t, path[t]]
        key = tuple(reversed(path))
        if score > best or (score == best and best_key is not None and key < best_key):
            best, best_key, best_path = score, key, path
    return np.array(best_path), best


def random_instance(rng, max_t=8, max_q=6):
    Q = int(rng.integers(1, max_q + 1))
    T = int(rng.integers(1, max_t + 1))
    while Q ** T > 20000:
        T -= 1
    band = int(rng.integers(0, Q))
    return rng.normal(size=(T, Q)) * 2.0, viterbi.make_triangular_transition(Q, band)


class TestTransition:
    def test_three_state_kernel(self):
        tm = viterbi.make_triangular_transition(3, 1)
        np.testing.assert_allclose(np.exp(tm.log_kernel), [0.25, 0.5, 0.25])

    def test_zero_band(self):
        tm = viterbi.make_triangular_transition(5, 0)
        np.testing.assert_array_equal(np.exp(tm.log_kernel), [1.0])

    def test_octave_band_on_pitch_grid(self):
        # one octave at 5 cents per bin
        tm = viterbi.make_triangular_transition(1440, 1200 // 5)
        assert tm.band_halfwidth == 240
        assert tm.log_kernel.shape == (481,)

    def test_rejects_jump_beyond_states(self):
        with pytest.raises(InvalidArgument):
            viterbi.make_triangular_transition(4, 4)

    @pytest.mark.parametrize("Q,b", [(7, 3), (50, 10), (1440, 240)])
    def test_kernel_shape_and_rows(self, Q, b):
        tm = viterbi.make_triangular_transition(Q, b)
        k = tm.log_kernel
        assert abs(np.exp(k).sum() - 1.0) < 1e-9
        np.testing.assert_array_equal(k, k[::-1])
        assert np.all(np.diff(k[b:]) <= 0)
        dense = np.exp(tm.dense())
        np.testing.assert_allclose(dense.sum(axis=1), 1.0, atol=1e-12)


class TestDecode:
    def test_single_frame_is_argmax(self):
        tm = viterbi.make_triangular_transition(3, 1)
        path = viterbi.decode(np.array([[-1.0, -0.1, -2.0]]), tm)
        assert path.states.tolist() == [1]

    def test_hand_scored_two_by_two(self):
        tm = viterbi.make_triangular_transition(2, 1)
        em = np.log([[0.9, 0.1], [0.2, 0.8]])
        # path probabilities: 00 0.06, 01 0.12, 10 1/300, 11 2/75
        path = viterbi.brute_force_decode(em, tm)
        assert path.states.tolist() == [0, 1]
        assert path.log_joint == pytest.approx(math.log(0.12), abs=1e-12)
        assert viterbi.decode(em, tm).states.tolist() == [0, 1]

    def test_zero_band_holds_state(self, rng):
        tm = viterbi.make_triangular_transition(6, 0)
        em = rng.normal(size=(10, 6))
        path = viterbi.decode(em, tm)
        assert np.all(path.states == np.argmax(em.sum(axis=0)))

    def test_one_hot_emissions(self):
        tm = viterbi.make_triangular_transition(4, 3)
        target = [0, 3, 1, 2]
        em = np.full((4, 4), -np.inf)
        em[np.arange(4), target] = 0.0
        assert viterbi.brute_force_decode(em, tm).states.tolist() == target
        assert viterbi.decode(em, tm).states.tolist() == target

    def test_ties_go_to_lowest_index(self):
        tm = viterbi.make_triangular_transition(4, 3)
        path = viterbi.decode(np.zeros((1, 4)), tm)
        assert path.states.tolist() == [0]

    def test_matches_itertools_oracle(self, rng):
        for _ in range(200):
            em, tm = random_instance(rng)
            expected, score = oracle(em, tm)
            got = viterbi.decode(em, tm)
            np.testing.assert_array_equal(got.states, expected)
            assert got.log_joint == score
            np.testing.assert_array_equal(viterbi.brute_force_decode(em, tm).states, expected)

    def test_log_joint_rescoring(self, rng):
        for _ in range(50):
            em, tm = random_instance(rng, max_t=30, max_q=40)
            path = viterbi.decode(em, tm)
            assert abs(path.log_joint - viterbi.score_path(em, tm, path.states)) < 1e-9

    def test_band_never_violated(self, rng):
        tm = viterbi.make_triangular_transition(60, 3)
        em = rng.normal(size=(200, 60)) * 5
        states = viterbi.decode(em, tm).states
        assert np.all(np.abs(np.diff(states)) <= 3)

    def test_minus_inf_frame_is_degenerate(self):
        tm = viterbi.make_triangular_transition(3, 1)
        em = np.zeros((4, 3))
        em[2] = -np.inf
        with pytest.raises(DegenerateInputError) as info:
            viterbi.decode(em, tm)
        assert info.value.frame == 2

    def test_unreachable_state_is_degenerate(self):
        tm = viterbi.make_triangular_transition(5, 1)
        em = np.full((2, 5), -np.inf)
        em[0, 0] = 0.0
        em[1, 4] = 0.0
        with pytest.raises(DegenerateInputError) as info:
            viterbi.decode(em, tm)
        assert info.value.frame == 1

    def test_rejects_nan(self):
        tm = viterbi.make_triangular_transition(3, 1)
        with pytest.raises(InvalidArgument):
            viterbi.decode(np.array([[0.0, np.nan, 0.0]]), tm)

    def test_brute_force_size_guard(self):
        tm = viterbi.make_triangular_transition(10, 2)
        with pytest.raises(InvalidArgument):
            viterbi.brute_force_decode(np.zeros((8, 10)), tm)

    def test_dense_reference_agrees(self, rng):
        tm = viterbi.make_triangular_transition(200, 30)
        em = rng.normal(size=(80, 200)) * 3
        a, b = viterbi.decode(em, tm), viterbi.decode_dense(em, tm)
        np.testing.assert_array_equal(a.states, b.states)
        assert a.log_joint == b.log_joint


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(-50, 50))
def test_frame_offset_invariance(seed, shift):
    rng = np.random.default_rng(seed)
    em, tm = random_instance(rng, max_t=20, max_q=30)
    frame = int(rng.integers(0, em.shape[0]))
    moved = em.copy()
    moved[frame] += shift
    np.testing.assert_array_equal(viterbi.decode(em, tm).states, viterbi.decode(moved, tm).states)


class TestBatch:
    def test_singleton(self, rng):
        tm = viterbi.make_triangular_transition(20, 4)
        em = rng.normal(size=(30, 20))
        (only,) = viterbi.decode_batch([em], tm)
        np.testing.assert_array_equal(only.states, viterbi.decode(em, tm).states)

    @pytest.mark.parametrize("workers", [1, 2, 5])
    def test_equals_sequential_for_any_worker_count(self, rng, workers):
        tm = viterbi.make_triangular_transition(120, 20)
        seqs = [rng.normal(size=(int(rng.integers(1, 60)), 120)) for _ in range(9)]
        expected = [viterbi.decode(s, tm) for s in seqs]
        got = viterbi.decode_batch(seqs, tm, workers=workers)
        for a, b in zip(expected, got):
            np.testing.assert_array_equal(a.states, b.states)
            assert a.log_joint == b.log_joint
        shuffled = viterbi.decode_batch(seqs[::-1], tm, workers=workers)[::-1]
        for a, b in zip(expected, shuffled):
            np.testing.assert_array_equal(a.states, b.states)

    def test_error_isolation(self, rng):
        tm = viterbi.make_triangular_transition(10, 2)
        seqs = [rng.normal(size=(5, 10)), np.zeros((0, 10)), rng.normal(size=(7, 10))]
        with pytest.raises(BatchDecodeError) as info:
            viterbi.decode_batch(seqs, tm, workers=2)
        err = info.value
        assert set(err.errors) == {1}
        assert err.results[1] is None
        np.testing.assert_array_equal(err.results[2].states, viterbi.decode(seqs[2], tm).states)

    def test_empty_batch(self):
        with pytest.raises(InvalidArgument):
            viterbi.decode_batch([], viterbi.make_triangular_transition(3, 1))

    def test_thread_cap_from_environment(self, monkeypatch):
        monkeypatch.setenv("PROMREP_THREADS", "1")
        assert viterbi.default_workers() == 1
