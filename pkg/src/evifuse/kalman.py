"""Scalar Kalman filter with identity dynamics (F = H = 1).

Smooths the stream of fused "true" masses produced by the evidence
pipeline.  The state is one estimate plus its error variance; process and
measurement noise are fixed per filter instance.
"""

from dataclasses import dataclass, replace

import numpy as np


@dataclass(frozen=True)
class KalmanState:
    x_hat: float
    p_var: float
    q_var: float
    r_var: float

    def __post_init__(self):
        if self.p_var < 0.0 or self.q_var < 0.0:
            raise ValueError("variances must be non-negative")
        if self.r_var <= 0.0:
            raise ValueError("measurement noise variance must be positive")


def predict(s: KalmanState) -> KalmanState:
    """Time update: the estimate is carried over, variance grows by q."""
    return replace(s, p_var=s.p_var + s.q_var)


def update(s: KalmanState, z: float) -> KalmanState:
    """Measurement update with observation z."""
    gain = s.p_var / (s.p_var + s.r_var)
    return replace(
        s,
        x_hat=s.x_hat + gain * (z - s.x_hat),
        p_var=(1.0 - gain) * s.p_var,
    )


def filter_sequence(init: KalmanState, observations) -> tuple[np.ndarray, KalmanState]:
    """Alternate predict/update over the observations.

    Returns an (n, 2) array of (x_hat, p_var) after each observation along
    with the final state, so filtering can resume where it stopped.
    """
    obs = np.asarray(observations, dtype=np.float64)
    if obs.ndim != 1 or obs.size == 0:
        raise ValueError("observations must be a non-empty 1-d sequence")
    out = np.empty((obs.size, 2))
    s = init
    for i, z in enumerate(obs):
        s = update(predict(s), float(z))
        out[i, 0] = s.x_hat
        out[i, 1] = s.p_var
    return out, s
