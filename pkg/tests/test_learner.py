import numpy as np
import pytest

from olnv.core import AnchorConfig, PenaltyPair, Sample
from olnv.data import FixedPenalties, SynthConfig, synth_stream
from olnv.errors import ConfigError
from olnv.learner import (
    OlnvConfig,
    accumulate_sq_grad,
    default_q_init,
    init,
    learning_rate,
    run_stream,
    step,
)


def make_config(dim=1, **overrides):
    defaults = dict(
        q_init=np.ones(dim),
        capacity=100.0,
        eta=0.001,
        rho=0.95,
        epsilon=1e-6,
        anchor=AnchorConfig(mu=1.0),
    )
    defaults.update(overrides)
    return OlnvConfig(**defaults)


def make_sample(energy, psi_plus, psi_minus, features):
    return Sample(energy=energy, penalties=PenaltyPair(psi_plus, psi_minus), features=np.asarray(features, float))


class TestInit:
    def test_zeroed_accumulator(self):
        state = init(make_config(dim=3))
        np.testing.assert_array_equal(state.g2_bar, np.zeros(3))
        assert state.step_count == 0

    def test_q_init_copied_exactly(self):
        q0 = np.array([1.0, 0.01, 0.25])
        state = init(make_config(dim=3, q_init=q0))
        np.testing.assert_array_equal(state.q, q0)
        state.q[0] = 5.0
        assert q0[0] == 1.0  # init must not alias the config vector

    def test_invalid_configs_rejected(self):
        with pytest.raises(ConfigError):
            make_config(rho=1.0)
        with pytest.raises(ConfigError):
            make_config(eta=0.0)
        with pytest.raises(ConfigError):
            make_config(mode="smooth")  # alpha missing
        with pytest.raises(ConfigError):
            make_config(capacity=-5.0)

    def test_default_q_init(self):
        np.testing.assert_allclose(default_q_init(4, 1), [0.01, 1.0, 0.01, 0.01])


class TestRateUpdates:
    def test_accumulate_from_zero(self):
        np.testing.assert_allclose(accumulate_sq_grad(np.zeros(1), np.array([2.0]), 0.95), [0.2])

    def test_zero_gradient_decays(self):
        prev = np.array([4.0, 1.0])
        np.testing.assert_allclose(accumulate_sq_grad(prev, np.zeros(2), 0.95), 0.95 * prev)

    def test_memoryless_endpoint(self):
        np.testing.assert_allclose(accumulate_sq_grad(np.array([7.0]), np.array([3.0]), 0.0), [9.0])

    def test_rate_at_zero_accumulator(self):
        np.testing.assert_allclose(learning_rate(np.zeros(2), 0.001, 1e-6), [1.0, 1.0])

    def test_rate_approaches_eta(self):
        rate = learning_rate(np.array([1.0]), 0.001, 1e-12)
        assert rate[0] == pytest.approx(0.001, rel=1e-12 / 2)

    def test_rate_monotone_in_accumulator(self):
        r1 = learning_rate(np.array([1.0]), 0.001, 1e-6)
        r2 = learning_rate(np.array([2.0]), 0.001, 1e-6)
        assert r2[0] < r1[0]


class TestStep:
    def test_hand_traced_update(self):
        config = make_config()
        state = init(config)
        sample = make_sample(10.0, 7.0, 3.0, [2.0])
        new_state, rec = step(state, sample, config)
        assert rec.offer == 2.0
        assert rec.loss == pytest.approx(7.0 * 8.0)
        np.testing.assert_allclose(rec.gradient, [-14.0])
        np.testing.assert_allclose(new_state.g2_bar, [9.8])
        np.testing.assert_allclose(rec.learning_rate, [0.001 / np.sqrt(9.800001)], rtol=1e-12)
        np.testing.assert_allclose(new_state.q, [1.0 + 0.001 / np.sqrt(9.800001) * 14.0], rtol=1e-12)
        assert new_state.step_count == 1

    def test_zero_penalties_are_a_no_op(self):
        config = make_config()
        state = init(config)
        sample = make_sample(10.0, 0.0, 0.0, [2.0])
        new_state, rec = step(state, sample, config)
        assert rec.loss == 0.0
        np.testing.assert_array_equal(rec.gradient, [0.0])
        np.testing.assert_array_equal(new_state.q, state.q)

    def test_anchoring_extracts_signal_from_zero_penalties(self):
        config = make_config(anchor=AnchorConfig(mu=0.7, psi_bar_plus=1.0, psi_bar_minus=1.0))
        state = init(config)
        sample = make_sample(10.0, 0.0, 0.0, [2.0])  # prediction error is 8
        _, rec = step(state, sample, config)
        assert np.any(rec.gradient != 0.0)

    def test_loss_recorded_under_raw_penalties(self):
        config = make_config(anchor=AnchorConfig(mu=0.0, psi_bar_plus=9.0, psi_bar_minus=9.0))
        state = init(config)
        sample = make_sample(10.0, 7.0, 0.0, [2.0])
        _, rec = step(state, sample, config)
        assert rec.loss == pytest.approx(7.0 * 8.0)  # not the anchored 9.0

    def test_dimension_mismatch(self):
        config = make_config(dim=2)
        with pytest.raises(ValueError):
            step(init(config), make_sample(1.0, 1.0, 1.0, [1.0]), config)

    def test_zero_feature_vector_skips_projection(self):
        config = make_config(anchor=AnchorConfig(mu=0.5, psi_bar_plus=1.0, psi_bar_minus=1.0))
        state = init(config)
        sample = make_sample(10.0, 1.0, 1.0, [0.0])
        new_state, rec = step(state, sample, config)
        assert rec.offer == 0.0
        np.testing.assert_array_equal(new_state.q, state.q)  # gradient is scale * 0


class TestRunStream:
    def test_single_sample_equals_one_step(self):
        config = make_config()
        sample = make_sample(10.0, 7.0, 3.0, [2.0])
        state_a, rec_a = step(init(config), sample, config)
        state_b, recs = run_stream([sample], config)
        assert len(recs) == 1
        np.testing.assert_array_equal(state_a.q, state_b.q)
        np.testing.assert_array_equal(rec_a.gradient, recs[0].gradient)

    def test_replay_is_bitwise_identical(self):
        config = make_config()
        stream = synth_stream(SynthConfig(seed=5, horizon=200, penalties=FixedPenalties(2.0, 5.0)))
        _, recs1 = run_stream(stream, config)
        _, recs2 = run_stream(stream, config)
        assert all(
            r1.offer == r2.offer and np.array_equal(r1.q_after, r2.q_after)
            for r1, r2 in zip(recs1, recs2)
        )

    def test_empty_stream_rejected(self):
        with pytest.raises(ValueError):
            run_stream([], make_config())

    def test_offers_stay_in_range(self):
        config = make_config(eta=5.0, capacity=40.0)  # aggressive steps force clipping
        stream = synth_stream(
            SynthConfig(seed=9, horizon=500, penalties=FixedPenalties(6.0, 1.0), capacity=40.0)
        )
        _, recs = run_stream(stream, config)
        assert all(0.0 <= r.offer <= 40.0 for r in recs)

    def test_updated_q_feasible_for_its_feature(self):
        config = make_config(eta=5.0, capacity=40.0)
        stream = synth_stream(
            SynthConfig(seed=9, horizon=500, penalties=FixedPenalties(6.0, 1.0), capacity=40.0)
        )
        state = init(config)
        for sample in stream:
            state, _ = step(state, sample, config)
            v = float(sample.features @ state.q)
            assert -1e-9 <= v <= 40.0 + 1e-9

    def test_stasis_with_zero_penalties_and_mu_one(self):
        config = make_config()
        stream = [make_sample(float(e), 0.0, 0.0, [float(x)]) for e, x in zip(range(50), range(1, 51))]
        state, _ = run_stream(stream, config)
        np.testing.assert_array_equal(state.q, config.q_init)

    def test_reference_trajectory_stays_in_band(self):
        # year-long run with fixed asymmetric penalties; q must hold [0.8, 1.3]
        config = make_config(eta=0.005)
        stream = synth_stream(SynthConfig(seed=3, horizon=8760, penalties=FixedPenalties(7.0, 3.0)))
        _, recs = run_stream(stream, config)
        qs = np.array([r.q_after[0] for r in recs])
        assert qs.min() >= 0.8
        assert qs.max() <= 1.3

    def test_learning_rate_adapts_to_feature_scale(self, rng):
        # Scaling feature j by c drives its per-coordinate rate down by 1/c
        # once the squared-gradient average dominates the conditioner. The
        # stream keeps the prediction error positive throughout so both runs
        # see the identical subgradient slope sequence.
        horizon, c = 80, 1000.0
        x1 = rng.uniform(10.0, 90.0, horizon)
        x2 = rng.uniform(1.0, 2.0, horizon)
        pens = PenaltyPair(2.0, 5.0)
        base = [
            Sample(500.0, pens, np.array([x1[t], x2[t]])) for t in range(horizon)
        ]
        scaled = [
            Sample(500.0, pens, np.array([x1[t], c * x2[t]])) for t in range(horizon)
        ]
        cfg_base = make_config(dim=2, q_init=np.array([1.0, 0.01]), eta=0.005, capacity=1e6)
        cfg_scaled = make_config(dim=2, q_init=np.array([1.0, 0.01 / c]), eta=0.005, capacity=1e6)
        _, recs_base = run_stream(base, cfg_base)
        _, recs_scaled = run_stream(scaled, cfg_scaled)
        for rb, rs in zip(recs_base[50:], recs_scaled[50:]):
            assert rs.learning_rate[1] * c == pytest.approx(rb.learning_rate[1], rel=1e-6)
            assert rs.learning_rate[0] == pytest.approx(rb.learning_rate[0], rel=1e-9)

    def test_smooth_mode_approaches_subgradient(self):
        # with alpha -> 0 both modes produce the same gradient at the same
        # state whenever the prediction error is away from the kink
        config_sub = make_config(eta=0.005)
        config_smooth = make_config(eta=0.005, mode="smooth", alpha=1e-5)
        stream = synth_stream(SynthConfig(seed=13, horizon=300, penalties=FixedPenalties(7.0, 3.0)))
        state = init(config_sub)
        for sample in stream:
            u = sample.energy - float(sample.features @ state.q)
            _, rec_smooth = step(state, sample, config_smooth)
            state, rec_sub = step(state, sample, config_sub)
            if abs(u) > 1e-3:
                np.testing.assert_allclose(
                    rec_smooth.gradient, rec_sub.gradient, rtol=0, atol=1e-6
                )
