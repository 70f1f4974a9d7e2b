import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from parallel_vq._validation import ShapeError
from parallel_vq.core import (
    StepSchedule,
    h_term,
    nearest_prototype,
    run_sequential,
    step_value,
    vq_step,
    vq_step_batch,
)

finite = st.floats(-100, 100, allow_nan=False, allow_infinity=False)


@st.composite
def point_and_prototypes(draw, max_kappa=8, max_dim=5):
    kappa = draw(st.integers(1, max_kappa))
    dim = draw(st.integers(1, max_dim))
    w = draw(arrays(np.float64, (kappa, dim), elements=finite))
    z = draw(arrays(np.float64, (dim,), elements=finite))
    return z, w


def brute_force_nearest(z, w):
    best, best_d = 0, None
    for i, row in enumerate(w):
        d = sum((float(a) - float(b)) ** 2 for a, b in zip(row, z))
        if best_d is None or d < best_d:
            best, best_d = i, d
    return best


class TestNearestPrototype:
    def test_closer_row_wins(self):
        assert nearest_prototype([0.0, 0.0], [[1.0, 0.0], [0.0, 2.0]]) == 0

    def test_exact_match(self):
        w = np.arange(12.0).reshape(6, 2)
        assert nearest_prototype(w[3], w) == 3

    def test_tie_goes_to_lowest_index(self):
        assert nearest_prototype([0.0, 0.0], [[1.0, 0.0], [-1.0, 0.0]]) == 0

    def test_dimension_mismatch(self):
        with pytest.raises(ShapeError):
            nearest_prototype([0.0, 0.0, 0.0], [[1.0, 0.0]])

    @given(point_and_prototypes())
    def test_matches_brute_force(self, case):
        z, w = case
        assert nearest_prototype(z, w) == brute_force_nearest(z, w)


class TestHTerm:
    def test_zero_at_prototype(self):
        w = np.array([[1.0, 2.0], [3.0, 4.0]])
        assert np.array_equal(h_term(w[1], w), np.zeros_like(w))

    def test_example(self):
        h = h_term([0.0, 0.0], [[1.0, 0.0], [0.0, 2.0]])
        assert np.array_equal(h, [[1.0, 0.0], [0.0, 0.0]])

    @given(point_and_prototypes())
    def test_single_nonzero_row_at_winner(self, case):
        z, w = case
        h = h_term(z, w)
        nonzero = np.flatnonzero(np.any(h != 0, axis=1))
        assert len(nonzero) <= 1
        winner = nearest_prototype(z, w)
        assert np.array_equal(h[winner], w[winner] - z)


class TestVQStep:
    def test_eps_one_snaps_to_point(self):
        w = np.array([[0.3, 0.7], [5.0, 5.0]])
        z = np.array([0.1, 0.2])
        assert np.array_equal(vq_step(w, z, 1.0)[0], z)

    def test_midpoint(self):
        w = np.array([[2.0, 0.0], [10.0, 10.0]])
        out = vq_step(w, [0.0, 0.0], 0.5)
        assert np.array_equal(out, [[1.0, 0.0], [10.0, 10.0]])

    def test_input_not_mutated(self):
        w = np.array([[2.0, 0.0]])
        vq_step(w, [0.0, 0.0], 0.5)
        assert np.array_equal(w, [[2.0, 0.0]])

    @pytest.mark.parametrize("eps", [0.0, -0.1])
    def test_rejects_non_positive_eps(self, eps):
        with pytest.raises(ValueError):
            vq_step([[1.0]], [0.0], eps)

    def test_dimension_mismatch(self):
        with pytest.raises(ShapeError):
            vq_step([[1.0, 2.0]], [0.0], 0.5)

    def test_ten_chained_steps_match_closed_form(self):
        rng = np.random.default_rng(3)
        w0 = rng.normal(size=(4, 3))
        zs = rng.normal(size=(10, 3))
        schedule = StepSchedule("inverse", 5.0, 10.0)
        traj = [w0]
        for t in range(10):
            traj.append(vq_step(traj[-1], zs[t], step_value(schedule, t + 1)))
        closed = w0 - sum(step_value(schedule, t + 1) * h_term(zs[t], traj[t]) for t in range(10))
        np.testing.assert_allclose(traj[-1], closed, rtol=1e-12, atol=0)

    @given(point_and_prototypes(), st.floats(1e-6, 1.0))
    def test_only_winner_moves_and_contracts(self, case, eps):
        z, w = case
        out = vq_step(w, z, eps)
        winner = nearest_prototype(z, w)
        others = np.ones(len(w), bool)
        others[winner] = False
        assert np.array_equal(out[others], w[others])
        before = np.linalg.norm(w[winner] - z)
        after = np.linalg.norm(out[winner] - z)
        assert after == pytest.approx((1 - eps) * before, rel=1e-12, abs=1e-12 * (1 + np.abs(w).max()))

    def test_batch_kernel_is_bitwise_equal(self):
        rng = np.random.default_rng(0)
        before = rng.random((5, 7, 8))
        Z = rng.random((5, 8))
        expected = np.stack([vq_step(before[m], Z[m], 0.037) for m in range(5)])
        W = before.copy()
        winners, scaled = vq_step_batch(W, Z, 0.037)
        assert np.array_equal(W, expected)
        for m in range(5):
            h = h_term(Z[m], before[m])
            assert winners[m] == nearest_prototype(Z[m], before[m])
            assert np.array_equal(scaled[m], 0.037 * h[winners[m]])


class TestStepSchedule:
    def test_inverse_formula(self):
        s = StepSchedule("inverse", 100.0, 1000.0)
        assert step_value(s, 1) == 100.0 / 1001.0

    def test_rejects_t_zero(self):
        with pytest.raises(ValueError):
            step_value(StepSchedule("inverse", 100.0, 1000.0), 0)

    def test_constant(self):
        s = StepSchedule("constant", 0.05)
        assert {step_value(s, t) for t in (1, 7, 10**6)} == {0.05}

    def test_inverse_decreases(self):
        s = StepSchedule("inverse", 100.0, 1000.0)
        assert step_value(s, 1) > step_value(s, 10**6)

    def test_power(self):
        s = StepSchedule("power", 2.0, 3.0, 0.75)
        assert step_value(s, 5) == pytest.approx(2.0 / 8 ** 0.75)

    @pytest.mark.parametrize("kwargs", [
        dict(form="inverse", a=0.0), dict(form="inverse", a=1.0, b=-1.0),
        dict(form="power", a=1.0, gamma=0.5), dict(form="power", a=1.0, gamma=1.2),
        dict(form="cosine", a=1.0),
    ])
    def test_invalid(self, kwargs):
        with pytest.raises(ValueError):
            StepSchedule(**kwargs)

    @given(st.sampled_from(["inverse", "power"]), st.floats(0.01, 1e4), st.floats(0, 1e4),
           st.floats(0.51, 1.0), st.integers(1, 10**7))
    def test_positive_and_non_increasing(self, form, a, b, gamma, t):
        s = StepSchedule(form, a, b, gamma)
        assert step_value(s, t) > 0
        assert step_value(s, t + 1) <= step_value(s, t)

    def test_default_for(self):
        s = StepSchedule.default_for(10000)
        assert step_value(s, 1) == pytest.approx(0.03 * 10000 / 10001)


class TestRunSequential:
    def test_zero_steps(self):
        w0 = np.array([[1.0, 2.0]])
        traj = run_sequential([[0.0, 0.0]], w0, StepSchedule(), 0)
        assert len(traj.states) == 1 and np.array_equal(traj.final, w0)

    def test_single_prototype_unit_steps_ends_on_last_point(self):
        shard = np.random.default_rng(1).normal(size=(9, 2))
        traj = run_sequential(shard, [[5.0, 5.0]], StepSchedule("constant", 1.0), 9)
        assert np.array_equal(traj.final[0], shard[-1])

    def test_tau_steps_match_closed_form(self):
        rng = np.random.default_rng(2)
        shard = rng.normal(size=(20, 3))
        w0 = rng.normal(size=(5, 3))
        schedule = StepSchedule("inverse", 2.0, 20.0)
        traj = run_sequential(shard, w0, schedule, 30, snapshot_every=1)
        closed = w0.copy()
        for t in range(30):
            closed -= step_value(schedule, t + 1) * h_term(shard[t % 20], traj.states[t])
        np.testing.assert_allclose(traj.final, closed, rtol=1e-12, atol=0)

    def test_cyclic_indexing(self):
        shard = np.array([[0.0], [10.0]])
        traj = run_sequential(shard, [[4.0]], StepSchedule("constant", 1.0), 3, snapshot_every=1)
        assert traj.states[:, 0, 0].tolist() == [4.0, 0.0, 10.0, 0.0]

    def test_empty_shard(self):
        with pytest.raises(ShapeError):
            run_sequential(np.zeros((0, 2)), [[0.0, 0.0]], StepSchedule(), 3)

    def test_snapshot_cadence_includes_final(self):
        shard = np.random.default_rng(0).normal(size=(10, 2))
        traj = run_sequential(shard, shard[:3], StepSchedule(), 25, snapshot_every=10)
        assert traj.ticks.tolist() == [0, 10, 20, 25]

    def test_deterministic(self):
        shard = np.random.default_rng(0).normal(size=(50, 4))
        a = run_sequential(shard, shard[:5], StepSchedule(), 200, snapshot_every=7)
        b = run_sequential(shard, shard[:5], StepSchedule(), 200, snapshot_every=7)
        assert np.array_equal(a.states, b.states)

    @settings(max_examples=50, deadline=None)
    @given(st.integers(1, 64), st.integers(0, 2**32 - 1))
    def test_telescoping_identity(self, tau, seed):
        rng = np.random.default_rng(seed)
        shard = rng.random((tau, 3))
        w0 = rng.random((4, 3))
        schedule = StepSchedule("inverse", rng.uniform(0.1, 10), rng.uniform(0, 50))
        traj = run_sequential(shard, w0, schedule, tau, snapshot_every=1)
        closed = w0.copy()
        for t in range(tau):
            closed -= step_value(schedule, t + 1) * h_term(shard[t], traj.states[t])
        np.testing.assert_allclose(traj.final, closed, rtol=1e-12, atol=1e-15)
