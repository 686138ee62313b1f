import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from ndtos.interpolate import IntervalImage, immerse
from ndtos.sorting import BLOCK, HierQueue, policy_code, priority_pop, priority_push, sort, sort_reference

import suites


def one_face(lo, hi):
    return IntervalImage(np.array([lo]), np.array([hi]))


def queue_with(levels, level_min=0, level_max=9):
    q = HierQueue(level_min, level_max, 16)
    for face, level in enumerate(levels):
        q.push(face, level)
    return q


def same_sort(a, b):
    return (np.array_equal(a.R, b.R) and np.array_equal(a.u_flat, b.u_flat)
            and np.array_equal(a.levels_visited, b.levels_visited)
            and np.array_equal(a.run_starts, b.run_starts))


class TestQueue:
    @pytest.mark.parametrize("l_cur,expected", [(7, 5), (0, 2), (3, 3)])
    def test_push_clamps_into_interval(self, l_cur, expected):
        q = HierQueue(0, 9, 1)
        assert priority_push(q, 0, one_face(2, 5), l_cur) == expected
        assert q.nonempty_levels() == [expected]

    def test_pop_at_current_level(self):
        assert priority_pop(queue_with([3]), 3) == (0, 3)

    def test_pop_tie_goes_by_policy(self):
        assert priority_pop(queue_with([1, 5]), 3, "down")[1] == 1
        assert priority_pop(queue_with([1, 5]), 3, "up")[1] == 5

    def test_pop_nearest_wins_over_policy(self):
        assert priority_pop(queue_with([0, 4]), 3, "down")[1] == 4

    def test_pop_only_choice(self):
        assert priority_pop(queue_with([5]), 2) == (0, 5)

    def test_pop_from_outside_the_range(self):
        assert priority_pop(queue_with([4], 2, 6), 0)[1] == 4

    def test_fifo_within_a_level(self):
        q = queue_with([2, 2, 2])
        assert [q.pop(2) for _ in range(3)] == [0, 1, 2]

    def test_errors(self):
        q = queue_with([2])
        with pytest.raises(RuntimeError):
            q.push(0, 3)
        with pytest.raises(ValueError):
            q.push(1, 10)
        with pytest.raises(IndexError):
            q.pop(4)
        q.pop(2)
        with pytest.raises(IndexError):
            priority_pop(q, 2)
        with pytest.raises(ValueError):
            HierQueue(3, 2, 1)

    def test_policy_names(self):
        assert policy_code("down") == policy_code("down-first") == 0
        assert policy_code("up") == policy_code(1) == 1
        with pytest.raises(ValueError):
            policy_code("sideways")


class TestSort:
    def test_constant(self):
        U = immerse(np.full((3, 4), 5, dtype=np.uint8))
        s = sort(U)
        assert (s.u_flat == 5).all()
        assert s.R[0] == np.ravel_multi_index(U.p_inf, U.lo.shape)
        assert np.array_equal(np.sort(s.R), np.arange(U.lo.size))
        assert s.levels_visited.tolist() == [5]

    def test_toy_staircase(self):
        # Flat toy image: a border at level 0 around a staircase 1, 1, 2, 3.
        u = np.zeros((3, 6), dtype=np.uint8)
        u[1, 1:5] = [1, 1, 2, 3]
        U = IntervalImage(u, u.copy(), p_inf=(0, 0), l_inf=0)
        for policy in ("down", "up"):
            s = sort(U, policy)
            assert s.u_flat[s.R].tolist() == [0] * 14 + [1, 1, 2, 3]
            assert s.levels_visited.tolist() == [0, 1, 2, 3]

    def test_bump(self):
        U = immerse(np.array([[0, 2, 0]]), l_inf=0)
        s = sort(U)
        prim = np.flatnonzero(U.primary.ravel())
        assert s.u_flat[prim].tolist() == [0, 2, 0]
        order = [f for f in s.R if U.primary.flat[f]]
        assert order[-1] == prim[1]

    def test_one_dimensional(self):
        U = immerse(np.array([3, 0, 3], dtype=np.uint8))
        assert same_sort(sort(U), sort_reference(U))

    def test_input_checks(self):
        U = immerse(np.array([[1, 2]]))
        with pytest.raises(ValueError):
            sort(IntervalImage(U.lo, U.hi))
        bad = IntervalImage(U.lo, U.hi, p_inf=U.p_inf, l_inf=U.l_inf + 1)
        with pytest.raises(ValueError):
            sort(bad)
        with pytest.raises(ValueError):
            sort(U, "sideways")

    @given(st.lists(st.integers(1, 5), min_size=1, max_size=3).flatmap(
        lambda shape: arrays(np.uint8, tuple(shape), elements=st.integers(0, 7))),
        st.sampled_from(["max", "min"]), st.sampled_from(["down", "up"]),
        st.one_of(st.just("median"), st.integers(0, 9)))
    def test_kernel_matches_reference(self, u, interpolation, policy, l_inf):
        U = immerse(u, interpolation=interpolation, l_inf=l_inf)
        s = sort(U, policy)
        assert same_sort(s, sort_reference(U, policy))
        assert s.R[0] == np.ravel_multi_index(U.p_inf, U.lo.shape)
        assert np.array_equal(np.sort(s.R), np.arange(U.lo.size))
        flat = s.u_flat
        assert (U.lo.ravel() <= flat).all() and (flat <= U.hi.ravel()).all()
        assert flat[s.R[0]] == U.l_inf

    @pytest.mark.parametrize("u", [
        np.full((20, 20), 9, dtype=np.uint8),  # one level: long block chains
        np.arange(400, dtype=np.uint16).reshape(20, 20) * 37 % 1000,  # many levels
        np.tile(np.array([0, 255], dtype=np.uint8), (16, 8)),  # two far levels, many reuses
    ])
    def test_block_queue_edge_cases(self, u):
        U = immerse(u)
        assert U.lo.size > 10 * BLOCK
        for policy in ("down", "up"):
            assert same_sort(sort(U, policy), sort_reference(U, policy))

    def test_policies_can_reorder_faces(self):
        # The tie rule changes R on some images while the trees agree.
        differ = 0
        for u in suites.random_images()[:60]:
            U = immerse(u)
            differ += not np.array_equal(sort(U, "down").R, sort(U, "up").R)
        assert differ > 0
