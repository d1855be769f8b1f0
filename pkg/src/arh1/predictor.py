"""One-step plug-in prediction with a fitted autocorrelation operator."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from arh1 import hilbert as hc
from arh1.estimators import EstimatedRho
from arh1.model import Trajectory


def _operator(est) -> np.ndarray:
    return est.operator if isinstance(est, EstimatedRho) else hc.as_operator(est)


@dataclass(frozen=True)
class Prediction:
    x_hat: np.ndarray
    x_true: np.ndarray | None = None

    @property
    def err_h(self) -> float | None:
        if self.x_true is None:
            return None
        return float(np.linalg.norm(self.x_hat - self.x_true))


def plug_in_predict(est, x_prev) -> np.ndarray:
    """Forecast of ``X_n`` given ``X_{n-1}``; accepts an EstimatedRho or a bare operator."""
    return hc.apply(_operator(est), x_prev)


def predict(est, x_prev, x_true=None) -> Prediction:
    x_hat = plug_in_predict(est, x_prev)
    return Prediction(x_hat, None if x_true is None else hc.as_vector(x_true, x_hat.size))


def oracle_gap(est, true_rho, x_prev) -> float:
    """``||est(x) - rho(x)||``, bounded by ``||est - rho|| ||x||``."""
    return hc.norm(plug_in_predict(est, x_prev) - hc.apply(true_rho, x_prev))


@dataclass(frozen=True)
class ForecastSummary:
    mean_sq_err: float
    count: int


def forecast_errors(traj, est, start_index: int = 1) -> tuple[np.ndarray, np.ndarray]:
    """Time indices ``t >= start_index`` and squared errors ``||est(X_{t-1}) - X_t||^2``."""
    x = traj.samples if isinstance(traj, Trajectory) else np.asarray(traj, dtype=float)
    if start_index < 1:
        raise ValueError("start_index must be at least 1")
    if start_index >= x.shape[0]:
        raise ValueError(f"no forecasts: start_index {start_index} >= n = {x.shape[0]}")
    A = _operator(est)
    if A.shape[0] != x.shape[1]:
        raise hc.DimensionError(f"estimator has dimension {A.shape[0]}, data {x.shape[1]}")
    resid = x[start_index:] - x[start_index - 1:-1] @ A.T
    return np.arange(start_index, x.shape[0]), np.sum(resid**2, axis=1)


def rolling_forecast_error(traj, est, start_index: int = 1) -> ForecastSummary:
    _, sq = forecast_errors(traj, est, start_index)
    return ForecastSummary(mean_sq_err=float(np.mean(sq)), count=int(sq.size))
