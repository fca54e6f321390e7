"""Unscented Kalman filter over per-axis constant-acceleration kinematics.

State vector: [px, vx, ax, py, vy, ay] (pixels, px/frame, px/frame^2).
The measurement is the raw position (px, py).  The dynamics are linear, so
the unscented transform is exact here up to floating point; a plain linear
Kalman filter with the same noise model must agree, which the test suite
exploits as an oracle.

All kernels operate on stacked states (leading batch axis) so a tracker can
advance every live track in a handful of numpy calls; ``birth``/``predict``/
``update``/``sigma_points`` are the single-state views of the same math.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError, NumericalDegeneracyError
from .geometry import Point2

STATE_DIM = 6
N_SIGMA = 2 * STATE_DIM + 1


@dataclass(frozen=True)
class UkfParams:
    """Unscented-transform scaling and noise intensities.

    alpha/beta/kappa are the standard Merwe scaling parameters; q_accel is
    the process-noise intensity in (px/frame^2)^2, r_pos the measurement
    variance in px^2.  p_vel0/p_acc0 seed the velocity and acceleration
    variances of a newborn filter.
    """

    alpha: float = 0.001
    beta: float = 2.0
    kappa: float = 0.0
    q_accel: float = 1.0
    r_pos: float = 1.0
    p_vel0: float = 100.0
    p_acc0: float = 10.0

    def __post_init__(self):
        if not (0.0 < self.alpha <= 1.0):
            raise InvalidInputError("alpha must be in (0, 1]")
        if self.q_accel <= 0 or self.r_pos <= 0:
            raise InvalidInputError("noise intensities must be positive")


@dataclass(frozen=True)
class FilterState:
    """Gaussian belief over one object's kinematic state."""

    mean: np.ndarray  # (6,)
    cov: np.ndarray   # (6, 6)

    def __post_init__(self):
        # copy so the state stays a value even when built from live views
        mean = np.array(self.mean, dtype=np.float64)
        cov = np.array(self.cov, dtype=np.float64)
        if mean.shape != (STATE_DIM,) or cov.shape != (STATE_DIM, STATE_DIM):
            raise InvalidInputError("filter state must be a 6-vector and 6x6 matrix")
        if not (np.all(np.isfinite(mean)) and np.all(np.isfinite(cov))):
            raise InvalidInputError("filter state must be finite")
        if np.abs(cov - cov.T).max() > 1e-9:
            raise InvalidInputError("covariance must be symmetric within 1e-9")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)

    @property
    def position(self) -> Point2:
        return Point2(float(self.mean[0]), float(self.mean[3]))


def transition_matrix(dt: float) -> np.ndarray:
    """Per-axis Newton step [p + v dt + a dt^2/2, v + a dt, a], block-diagonal."""
    block = np.array([[1.0, dt, 0.5 * dt * dt],
                      [0.0, 1.0, dt],
                      [0.0, 0.0, 1.0]])
    out = np.zeros((STATE_DIM, STATE_DIM))
    out[:3, :3] = block
    out[3:, 3:] = block
    return out


def process_noise(q_accel: float, dt: float) -> np.ndarray:
    """Q = q * g g^T per axis with g = (dt^2/2, dt, 1)."""
    g = np.array([0.5 * dt * dt, dt, 1.0])
    block = q_accel * np.outer(g, g)
    out = np.zeros((STATE_DIM, STATE_DIM))
    out[:3, :3] = block
    out[3:, 3:] = block
    return out


def merwe_weights(p: UkfParams) -> tuple[float, np.ndarray, np.ndarray]:
    """(lambda, mean weights, covariance weights) for the scaled transform."""
    n = STATE_DIM
    lam = p.alpha ** 2 * (n + p.kappa) - n
    wm = np.full(N_SIGMA, 1.0 / (2.0 * (n + lam)))
    wc = wm.copy()
    wm[0] = lam / (n + lam)
    wc[0] = wm[0] + (1.0 - p.alpha ** 2 + p.beta)
    return lam, wm, wc


def batch_birth(centers: np.ndarray, p: UkfParams) -> tuple[np.ndarray, np.ndarray]:
    """Newborn beliefs for measured centers (n, 2): zero motion, diagonal cov."""
    centers = np.asarray(centers, dtype=np.float64).reshape(-1, 2)
    n = centers.shape[0]
    means = np.zeros((n, STATE_DIM))
    means[:, 0] = centers[:, 0]
    means[:, 3] = centers[:, 1]
    diag = np.array([p.r_pos, p.p_vel0, p.p_acc0, p.r_pos, p.p_vel0, p.p_acc0])
    covs = np.broadcast_to(np.diag(diag), (n, STATE_DIM, STATE_DIM)).copy()
    return means, covs


def batch_sigma_points(means: np.ndarray, covs: np.ndarray,
                       p: UkfParams) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Merwe scaled sigma points for stacked states: (n, 13, 6) plus weights."""
    lam, wm, wc = merwe_weights(p)
    try:
        scaled = np.linalg.cholesky((STATE_DIM + lam) * covs)
    except np.linalg.LinAlgError as exc:
        raise NumericalDegeneracyError(f"covariance not positive-definite: {exc}") from exc
    pts = np.empty((means.shape[0], N_SIGMA, STATE_DIM))
    pts[:, 0] = means
    cols = np.swapaxes(scaled, -1, -2)  # (n, 6 columns, 6)
    pts[:, 1:STATE_DIM + 1] = means[:, None, :] + cols
    pts[:, STATE_DIM + 1:] = means[:, None, :] - cols
    return pts, wm, wc


def _recombine(pts: np.ndarray, wm: np.ndarray,
               wc: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Unscented mean and covariance of propagated points (n, 13, d).

    The mean is anchored at the center point: since the weights sum to one,
    mean = pts[0] + sum w_i (pts_i - pts[0]), which avoids the catastrophic
    cancellation of the direct weighted sum when alpha is small.
    """
    dev = pts - pts[:, :1]
    mean = pts[:, 0] + np.matmul(wm[None, None, :], dev)[:, 0]
    dev -= (mean - pts[:, 0])[:, None, :]  # now deviations from the new mean
    cov = np.matmul(dev.transpose(0, 2, 1) * wc[None, None, :], dev)
    return mean, cov


def _symmetrize(covs: np.ndarray) -> np.ndarray:
    return 0.5 * (covs + np.swapaxes(covs, -1, -2))


def batch_predict(means: np.ndarray, covs: np.ndarray, p: UkfParams,
                  dt: float = 1.0) -> tuple[np.ndarray, np.ndarray]:
    """Propagate stacked beliefs one step of constant-acceleration dynamics."""
    if dt <= 0:
        raise InvalidInputError("dt must be positive")
    pts, wm, wc = batch_sigma_points(means, covs, p)
    moved = pts @ transition_matrix(dt).T
    mean, cov = _recombine(moved, wm, wc)
    cov += process_noise(p.q_accel, dt)
    return mean, _symmetrize(cov)


def batch_update(means: np.ndarray, covs: np.ndarray, zs: np.ndarray,
                 p: UkfParams) -> tuple[np.ndarray, np.ndarray]:
    """Condition stacked beliefs on position measurements zs (n, 2)."""
    zs = np.asarray(zs, dtype=np.float64).reshape(-1, 2)
    if not np.all(np.isfinite(zs)):
        raise InvalidInputError("measurements must be finite")
    pts, wm, wc = batch_sigma_points(means, covs, p)
    zpts = pts[:, :, 0::3]  # strided view of (px, py)
    z_mean, s_cov = _recombine(zpts.copy(), wm, wc)
    s_cov = s_cov + p.r_pos * np.eye(2)

    dev_x = pts - means[:, None, :]
    dev_z = zpts - z_mean[:, None, :]
    cross = np.matmul(dev_x.transpose(0, 2, 1) * wc[None, None, :], dev_z)  # (n, 6, 2)
    try:
        gain = np.swapaxes(np.linalg.solve(s_cov, np.swapaxes(cross, -1, -2)), -1, -2)
    except np.linalg.LinAlgError as exc:
        raise NumericalDegeneracyError(f"innovation covariance singular: {exc}") from exc
    innov = zs - z_mean
    new_means = means + np.matmul(gain, innov[:, :, None])[:, :, 0]
    new_covs = covs - np.matmul(np.matmul(gain, s_cov), gain.transpose(0, 2, 1))
    return new_means, _symmetrize(new_covs)


def birth(center: Point2, p: UkfParams) -> FilterState:
    """Start a filter at a detected center with zero velocity/acceleration."""
    if not (np.isfinite(center[0]) and np.isfinite(center[1])):
        raise InvalidInputError("birth center must be finite")
    means, covs = batch_birth(np.array([center], dtype=np.float64), p)
    return FilterState(means[0], covs[0])


def sigma_points(s: FilterState, p: UkfParams) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(points (13, 6), mean weights, covariance weights) for one state."""
    pts, wm, wc = batch_sigma_points(s.mean[None], s.cov[None], p)
    return pts[0], wm, wc


def predict(s: FilterState, p: UkfParams, dt: float = 1.0) -> FilterState:
    means, covs = batch_predict(s.mean[None], s.cov[None], p, dt)
    return FilterState(means[0], covs[0])


def update(s: FilterState, z: Point2, p: UkfParams) -> FilterState:
    means, covs = batch_update(s.mean[None], s.cov[None],
                               np.array([z], dtype=np.float64), p)
    return FilterState(means[0], covs[0])
