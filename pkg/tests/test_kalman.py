"""Scalar Kalman filter: step arithmetic, limits, steady state against the
variance-recurrence fixed point, and streaming invariance."""

import numpy as np
import pytest

from evifuse.kalman import KalmanState, filter_sequence, predict, update


def riccati_fixed_point(q: float, r: float, p0: float = 1.0) -> float:
    """Iterate the variance recurrence p <- ((p+q) r) / ((p+q) + r)."""
    p = p0
    for _ in range(1_000_000):
        nxt = ((p + q) * r) / ((p + q) + r)
        if abs(nxt - p) <= 1e-18:
            return nxt
        p = nxt
    return p


class TestSteps:
    def test_predict_without_process_noise(self):
        s = KalmanState(0.3, 1.0, 0.0, 1e-2)
        assert predict(s) == s

    def test_predict_adds_q(self):
        s = KalmanState(0.0, 1.0, 0.5, 1e-2)
        assert predict(s).p_var == 1.5

    def test_repeated_predicts_grow_linearly(self):
        s = KalmanState(0.0, 1.0, 0.25, 1e-2)
        for i in range(1, 9):
            s = predict(s)
            assert s.p_var == pytest.approx(1.0 + 0.25 * i, abs=1e-12)

    def test_update_zero_gain_limit(self):
        s = KalmanState(0.4, 1.0, 0.0, 1e12)
        out = update(s, 100.0)
        assert out.x_hat == pytest.approx(0.4, abs=1e-9)

    def test_update_unit_gain_limit(self):
        s = KalmanState(0.0, 1e12, 0.0, 1.0)
        out = update(s, 7.0)
        assert out.x_hat == pytest.approx(7.0, rel=1e-9)

    def test_update_arithmetic(self):
        s = KalmanState(0.0, 1.0, 0.0, 1.0)
        out = update(s, 1.0)
        assert out.x_hat == 0.5
        assert out.p_var == 0.5

    def test_state_validation(self):
        with pytest.raises(ValueError):
            KalmanState(0.0, -1.0, 0.0, 1.0)
        with pytest.raises(ValueError):
            KalmanState(0.0, 1.0, 0.0, 0.0)


class TestFilterSequence:
    def test_constant_observations_contract_monotonically(self):
        init = KalmanState(0.0, 1.0, 0.0, 1e-2)
        trace, _ = filter_sequence(init, np.full(50, 0.8))
        err = np.abs(trace[:, 0] - 0.8)
        assert np.all(np.diff(err) <= 0.0)
        assert err[-1] < 0.8 * 1e-3  # relative to the initial estimate error

    def test_tiny_measurement_noise_tracks_observations(self):
        init = KalmanState(0.0, 1.0, 1e-4, 1e-12)
        obs = np.array([0.3, 0.9, 0.1, 0.7])
        trace, _ = filter_sequence(init, obs)
        assert np.max(np.abs(trace[:, 0] - obs)) <= 1e-6

    def test_variance_hits_riccati_fixed_point(self):
        q, r = 1e-4, 1e-2
        rng = np.random.default_rng(21)
        obs = 0.7 + 0.1 * rng.standard_normal(1000)
        init = KalmanState(float(obs[0]), 1.0, q, r)
        trace, _ = filter_sequence(init, obs)
        assert abs(trace[-1, 1] - riccati_fixed_point(q, r)) <= 1e-8

    def test_streaming_equals_batch(self):
        rng = np.random.default_rng(22)
        obs = rng.random(40)
        init = KalmanState(0.5, 1.0, 1e-3, 1e-2)
        full, _ = filter_sequence(init, obs)
        head, mid_state = filter_sequence(init, obs[:17])
        tail, _ = filter_sequence(mid_state, obs[17:])
        resumed = np.vstack([head, tail])
        assert np.array_equal(full, resumed)

    def test_variance_trajectory_ignores_observations(self):
        rng = np.random.default_rng(23)
        init = KalmanState(0.0, 2.0, 1e-3, 5e-2)
        a, _ = filter_sequence(init, rng.random(100))
        b, _ = filter_sequence(init, 10.0 * rng.random(100) - 5.0)
        assert np.array_equal(a[:, 1], b[:, 1])

    def test_variance_nonnegative_and_monotone_without_process_noise(self):
        init = KalmanState(0.0, 1.0, 0.0, 1e-2)
        trace, _ = filter_sequence(init, np.zeros(200))
        assert np.all(trace[:, 1] >= 0.0)
        assert np.all(np.diff(trace[:, 1]) <= 0.0)

    def test_empty_observations_rejected(self):
        with pytest.raises(ValueError):
            filter_sequence(KalmanState(0.0, 1.0, 0.0, 1.0), [])
