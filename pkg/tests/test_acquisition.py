import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

import oracles
from active_mde.acquisition import (
    AcquisitionConfig,
    ScheduleConfig,
    aggregate,
    alpha_step,
    alpha_trajectory,
    beta_schedule,
    select_trajectory,
)
from active_mde.environments import GridWorld
from active_mde.gp_core import GpConfig
from active_mde.mde import Mde, prior_mde
from active_mde.planner import Trajectory

finite = st.floats(-10, 10, allow_nan=False)


class TableMde(Mde):
    """MDE stub looking up (mu, sigma) per (state, action), with a default."""

    def __init__(self, env, table, default=(0.0, 0.1)):
        super().__init__(env, prior_mde(env).gp)
        self.table = table
        self.default = default

    def raw_predict(self, s, a):
        return self.table.get((s, a), self.default)


@pytest.fixture
def grid():
    return GridWorld(5, 5, set(), set())


def straight(y, n, x0=0):
    return Trajectory([(x0 + i, y) for i in range(n + 1)], ["right"] * n)


class TestAlphaStep:
    @pytest.mark.parametrize(
        "mu,sigma,c,expected", [(0.3, 0.1, 1.0, 0.2), (0.3, 0.5, 0.0, 0.3), (0.0, 0.2, 2.0, -0.4)]
    )
    def test_examples(self, mu, sigma, c, expected):
        assert alpha_step(mu, sigma, c) == pytest.approx(expected)


class TestAggregate:
    def test_max(self):
        assert aggregate([-1, -3, -2], 0.9, "max") == pytest.approx(-1.0)

    def test_sum(self):
        assert aggregate([-1, -3, -2], 0.9, "sum") == pytest.approx(-5.32)

    def test_undiscounted_sum(self):
        assert aggregate([-1, -3, -2], 1.0, "sum") == pytest.approx(-6.0)

    def test_empty(self):
        with pytest.raises(ValueError):
            aggregate([], 0.9, "max")

    def test_unknown_mode(self):
        with pytest.raises(ValueError):
            aggregate([1.0], 0.9, "mean")

    @given(st.lists(finite, min_size=1, max_size=20))
    def test_undiscounted_max_is_plain_max(self, values):
        assert aggregate(values, 1.0, "max") == max(values)

    @given(finite, st.floats(0.01, 1), st.sampled_from(["max", "sum"]))
    def test_singleton(self, v, gamma, mode):
        assert aggregate([v], gamma, mode) == v

    @given(st.lists(finite, min_size=1, max_size=20), st.floats(0.01, 1))
    def test_against_loop(self, values, gamma):
        disc = [v * gamma**t for t, v in enumerate(values)]
        assert aggregate(values, gamma, "max") == pytest.approx(max(disc), abs=1e-12)
        assert aggregate(values, gamma, "sum") == pytest.approx(math.fsum(disc), abs=1e-9)


class TestConfigs:
    @pytest.mark.parametrize("kw", [{"c": -0.1}, {"gamma": 0.0}, {"gamma": 1.5}, {"mode": "mean"}])
    def test_acquisition_invalid(self, kw):
        with pytest.raises(ValueError):
            AcquisitionConfig(**kw)

    @pytest.mark.parametrize("kw", [{"J": 0}, {"k1": 0.0}, {"k2": -1.0}, {"variant": "linear"}])
    def test_schedule_invalid(self, kw):
        with pytest.raises(ValueError):
            ScheduleConfig(**kw)

    def test_defaults(self):
        a = AcquisitionConfig()
        assert (a.c, a.gamma, a.mode) == (1.0, 0.9, "max")
        s = ScheduleConfig()
        assert (s.k1, s.k2, s.J, s.variant) == (2.0, 0.5, 20, "sigmoid_full")


class TestAlphaTrajectory:
    def test_prior_equal_steps(self, grid):
        m = prior_mde(grid)
        s0 = math.sqrt(GpConfig().prior_signal_variance + GpConfig().prior_noise_variance)
        cfg = AcquisitionConfig(c=1.5, gamma=1.0, mode="max")
        assert alpha_trajectory(m, straight(0, 3), cfg) == pytest.approx(-1.5 * s0)

    def test_dominant_step_matches_hand_aggregation(self, grid):
        # step 1 has high mu and low sigma; its discounted utility is the largest
        table = {((0, 0), "right"): (0.0, 0.2), ((1, 0), "right"): (0.5, 0.01), ((2, 0), "right"): (0.02, 0.1)}
        m = TableMde(grid, table)
        cfg = AcquisitionConfig(c=1.0, gamma=0.9, mode="max")
        hand = max(0.0 - 0.2, 0.9 * (0.5 - 0.01), 0.81 * (0.02 - 0.1))
        assert alpha_trajectory(m, straight(0, 3), cfg) == pytest.approx(hand)
        assert hand == pytest.approx(0.9 * 0.49)

    def test_mu_is_clamped_before_utility(self, grid):
        m = TableMde(grid, {}, default=(-0.3, 0.1))
        cfg = AcquisitionConfig(c=1.0, gamma=1.0, mode="sum")
        assert alpha_trajectory(m, straight(0, 2), cfg) == pytest.approx(-0.2)

    def test_requires_an_action(self, grid):
        with pytest.raises(ValueError):
            alpha_trajectory(prior_mde(grid), Trajectory([(0, 0)], []), AcquisitionConfig())

    @given(st.lists(st.tuples(st.floats(0, 1), st.floats(0, 1)), min_size=1, max_size=4))
    def test_sum_bounded_by_length_times_max(self, steps):
        grid = GridWorld(5, 5, set(), set())
        traj = straight(0, len(steps))
        m = TableMde(grid, {((i, 0), "right"): v for i, v in enumerate(steps)})
        s = alpha_trajectory(m, traj, AcquisitionConfig(gamma=1.0, mode="sum"))
        mx = alpha_trajectory(m, traj, AcquisitionConfig(gamma=1.0, mode="max"))
        assert s <= len(steps) * mx + 1e-12

    @given(
        st.lists(st.tuples(st.floats(0, 1), st.floats(0, 1)), min_size=1, max_size=4),
        st.floats(0, 5),
        st.floats(0, 5),
        st.sampled_from(["max", "sum"]),
    )
    def test_nonincreasing_in_c(self, steps, c1, c2, mode):
        grid = GridWorld(5, 5, set(), set())
        traj = straight(0, len(steps))
        m = TableMde(grid, {((i, 0), "right"): v for i, v in enumerate(steps)})
        lo, hi = sorted((c1, c2))
        a_lo = alpha_trajectory(m, traj, AcquisitionConfig(c=lo, mode=mode))
        a_hi = alpha_trajectory(m, traj, AcquisitionConfig(c=hi, mode=mode))
        assert a_hi <= a_lo + 1e-12


class TestSelect:
    def test_singleton(self, grid):
        t = straight(0, 2)
        assert select_trajectory(prior_mde(grid), [t], AcquisitionConfig()) is t

    def test_argmin(self, grid):
        a, b = straight(0, 1), straight(1, 1)
        m = TableMde(grid, {((0, 0), "right"): (0.0, 0.5), ((0, 1), "right"): (0.0, 0.7)})
        cfg = AcquisitionConfig(c=1.0)
        assert alpha_trajectory(m, a, cfg) == pytest.approx(-0.5)
        assert alpha_trajectory(m, b, cfg) == pytest.approx(-0.7)
        assert select_trajectory(m, [a, b], cfg) is b

    def test_tie_goes_to_earliest(self, grid):
        cands = [straight(y, 2) for y in range(3)]
        assert select_trajectory(prior_mde(grid), cands, AcquisitionConfig()) is cands[0]

    def test_empty(self, grid):
        with pytest.raises(ValueError):
            select_trajectory(prior_mde(grid), [], AcquisitionConfig())

    @given(
        st.lists(st.lists(st.tuples(st.floats(0, 1), st.floats(0, 1)), min_size=3, max_size=3), min_size=2, max_size=4),
        st.floats(0, 1),
    )
    def test_shift_invariance_equal_lengths(self, per_cand, shift):
        grid = GridWorld(5, 5, set(), set())
        cands = [straight(y, 3) for y in range(len(per_cand))]
        table = {((i, y), "right"): v for y, steps in enumerate(per_cand) for i, v in enumerate(steps)}
        shifted = {k: (mu + shift, s) for k, (mu, s) in table.items()}
        cfg = AcquisitionConfig(gamma=1.0, mode="sum")
        vals = [alpha_trajectory(TableMde(grid, table), c, cfg) for c in cands]
        vals_sorted = sorted(vals)
        if len(vals_sorted) > 1 and vals_sorted[1] - vals_sorted[0] < 1e-9:
            return
        first = select_trajectory(TableMde(grid, table), cands, cfg)
        second = select_trajectory(TableMde(grid, shifted), cands, cfg)
        assert first is second


class TestBetaSchedule:
    cfg = ScheduleConfig(2.0, 0.5, 20)

    def test_midpoint(self):
        assert beta_schedule(10, self.cfg) == pytest.approx(0.0, abs=1e-15)

    def test_endpoints(self):
        # 4 / (1 + e^5) - 2
        assert beta_schedule(0, self.cfg) == pytest.approx(-1.973228596, abs=1e-9)
        assert beta_schedule(20, self.cfg) == pytest.approx(1.973228596, abs=1e-9)

    @pytest.mark.parametrize("j", [0, 3, 10, 17, 20])
    def test_against_oracle(self, j):
        assert beta_schedule(j, self.cfg) == pytest.approx(oracles.sigmoid_beta(j, 2.0, 0.5, 20), abs=1e-12)

    def test_capped(self):
        cfg = ScheduleConfig(2.0, 0.5, 20, "sigmoid_capped")
        assert beta_schedule(20, cfg) == 1.0
        assert beta_schedule(0, cfg) == pytest.approx(beta_schedule(0, self.cfg))

    def test_fixed(self):
        assert beta_schedule(7, ScheduleConfig(variant="fixed_low")) == -2.0
        assert beta_schedule(7, ScheduleConfig(variant="fixed_high")) == 1.0

    def test_negative_index(self):
        with pytest.raises(ValueError):
            beta_schedule(-1, self.cfg)

    @given(st.integers(1, 100), st.floats(0.1, 5), st.floats(0.05, 2), st.data())
    def test_increasing_and_odd(self, J, k1, k2, data):
        cfg = ScheduleConfig(k1, k2, J)
        j = data.draw(st.integers(0, J - 1))
        assert beta_schedule(j + 1, cfg) > beta_schedule(j, cfg) or math.isclose(
            beta_schedule(j + 1, cfg), beta_schedule(j, cfg), abs_tol=1e-15
        )
        t = data.draw(st.floats(0, J / 2))
        assert beta_schedule(J / 2 + t, cfg) == pytest.approx(-beta_schedule(J / 2 - t, cfg), abs=1e-12)
