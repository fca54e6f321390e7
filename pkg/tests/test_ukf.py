import math

import numpy as np
import pytest

from polymot.errors import InvalidInputError, NumericalDegeneracyError
from polymot.geometry import Point2
from polymot.ukf import (FilterState, UkfParams, birth, predict, sigma_points,
                         update)

from oracles import LinearKalman


def drive(state, params, observations):
    for zx, zy in observations:
        state = predict(state, params)
        state = update(state, Point2(zx, zy), params)
    return state


class TestBirth:
    def test_mean_layout(self):
        s = birth(Point2(10, 20), UkfParams())
        assert np.array_equal(s.mean, [10, 0, 0, 20, 0, 0])

    def test_covariance_spd(self):
        s = birth(Point2(-3.5, 400.0), UkfParams())
        assert np.array_equal(s.cov, s.cov.T)
        np.linalg.cholesky(s.cov)  # raises if not positive-definite

    def test_deterministic(self):
        a = birth(Point2(1, 2), UkfParams())
        b = birth(Point2(1, 2), UkfParams())
        assert np.array_equal(a.mean, b.mean) and np.array_equal(a.cov, b.cov)

    def test_nonfinite_rejected(self):
        with pytest.raises(InvalidInputError):
            birth(Point2(float("nan"), 0), UkfParams())


class TestSigmaPoints:
    def test_unscaled_identity(self):
        p = UkfParams(alpha=1.0, kappa=0.0)
        s = FilterState(np.zeros(6), np.eye(6))
        pts, wm, wc = sigma_points(s, p)
        assert pts.shape == (13, 6)
        assert np.allclose(pts[0], 0)
        expected = math.sqrt(6.0)
        for k in range(6):
            assert pts[1 + k][k] == pytest.approx(expected)
            assert pts[7 + k][k] == pytest.approx(-expected)

    def test_mean_weights_sum_to_one(self):
        _, wm, _ = sigma_points(birth(Point2(0, 0), UkfParams()), UkfParams())
        assert wm.sum() == pytest.approx(1.0, abs=1e-9)

    def test_round_trip_recovers_moments(self):
        rng = np.random.default_rng(0)
        p = UkfParams()
        for _ in range(10):
            mean = rng.uniform(-5, 5, 6)
            a = rng.uniform(-1, 1, (6, 6))
            cov = a @ a.T + 0.5 * np.eye(6)
            pts, wm, wc = sigma_points(FilterState(mean, cov), p)
            mean_rt = pts[0] + wm @ (pts - pts[0])
            dev = pts - mean_rt
            cov_rt = np.einsum("s,sa,sb->ab", wc, dev, dev)
            assert np.abs(mean_rt - mean).max() < 1e-9
            assert np.abs(cov_rt - cov).max() < 1e-9

    def test_degenerate_covariance_raises(self):
        bad = FilterState(np.zeros(6), np.diag([1.0, 1.0, 1.0, 1.0, 1.0, -1.0]))
        with pytest.raises(NumericalDegeneracyError):
            sigma_points(bad, UkfParams())


class TestPredict:
    def test_constant_velocity_step(self):
        p = UkfParams()
        s = FilterState(np.array([0, 1, 0, 0, 0, 0.0]), np.eye(6))
        out = predict(s, p)
        assert out.mean[0] == pytest.approx(1.0, abs=1e-9)
        assert out.mean[3] == pytest.approx(0.0, abs=1e-9)

    def test_acceleration_step(self):
        p = UkfParams()
        s = FilterState(np.array([0, 0, 2, 0, 0, 0.0]), np.eye(6))
        out = predict(s, p)
        assert out.mean[0] == pytest.approx(1.0, abs=1e-9)  # a dt^2 / 2
        assert out.mean[1] == pytest.approx(2.0, abs=1e-9)  # v + a dt

    def test_trace_strictly_grows(self):
        p = UkfParams()
        s = birth(Point2(4, 7), p)
        for _ in range(10):
            nxt = predict(s, p)
            assert np.trace(nxt.cov) > np.trace(s.cov)
            s = update(nxt, Point2(4, 7), p)

    def test_translation_equivariance(self):
        p = UkfParams()
        base = FilterState(np.array([3.0, 1.5, -0.2, 8.0, -1.0, 0.1]),
                           np.diag([1, 2, 3, 1, 2, 3.0]))
        shifted = FilterState(base.mean + np.array([10, 0, 0, -5, 0, 0]), base.cov)
        a = predict(base, p)
        b = predict(shifted, p)
        assert b.mean[0] - a.mean[0] == pytest.approx(10, abs=1e-9)
        assert b.mean[3] - a.mean[3] == pytest.approx(-5, abs=1e-9)
        assert np.allclose(a.cov, b.cov, atol=1e-9)

    def test_requires_positive_dt(self):
        with pytest.raises(InvalidInputError):
            predict(birth(Point2(0, 0), UkfParams()), UkfParams(), dt=0.0)


class TestUpdate:
    def test_zero_innovation_keeps_position(self):
        p = UkfParams()
        s = drive(birth(Point2(5, 5), p), p, [(7, 6), (9, 7), (11, 8)])
        pred = predict(s, p)
        upd = update(pred, pred.position, p)
        assert abs(upd.mean[0] - pred.mean[0]) < 1e-9
        assert abs(upd.mean[3] - pred.mean[3]) < 1e-9

    def test_repeated_updates_converge(self):
        p = UkfParams()
        s = birth(Point2(0, 0), p)
        for _ in range(50):
            s = predict(s, p)
            s = update(s, Point2(12.0, -4.0), p)
        assert math.hypot(s.mean[0] - 12.0, s.mean[3] + 4.0) < 0.01

    def test_matches_linear_kalman(self):
        p = UkfParams()
        rng = np.random.default_rng(42)
        s = birth(Point2(50, 80), p)
        kf = LinearKalman(50, 80, p.q_accel, p.r_pos, p.p_vel0, p.p_acc0)
        for t in range(1, 61):
            z = (50 + 2.0 * t + rng.normal(0, 1), 80 - 1.5 * t + rng.normal(0, 1))
            s = predict(s, p)
            kf.predict()
            s = update(s, Point2(*z), p)
            kf.update(*z)
            assert np.abs(s.mean - kf.x).max() < 1e-6
            assert np.abs(s.cov - kf.P).max() < 1e-6

    def test_covariance_stays_spd(self):
        p = UkfParams()
        rng = np.random.default_rng(1)
        s = birth(Point2(0, 0), p)
        for t in range(40):
            s = predict(s, p)
            if t % 3:
                s = update(s, Point2(rng.uniform(-5, 5), rng.uniform(-5, 5)), p)
            assert np.abs(s.cov - s.cov.T).max() < 1e-9
            np.linalg.cholesky(s.cov)


def test_frozen_track_keeps_constant_velocity():
    # observed at constant velocity for k >= 5 frames, then coasting:
    # the prediction drifts less than a pixel per coasted frame
    p = UkfParams()
    for k in (5, 8, 12):
        vx, vy = 3.0, -2.0
        s = birth(Point2(0, 0), p)
        for t in range(1, k + 1):
            s = predict(s, p)
            s = update(s, Point2(vx * t, vy * t), p)
        coast = s
        for m in range(1, 11):
            coast = predict(coast, p)
            t = k + m
            err = math.hypot(coast.mean[0] - vx * t, coast.mean[3] - vy * t)
            assert err <= 1.0 * m


def test_params_validation():
    with pytest.raises(InvalidInputError):
        UkfParams(alpha=0.0)
    with pytest.raises(InvalidInputError):
        UkfParams(q_accel=-1.0)
