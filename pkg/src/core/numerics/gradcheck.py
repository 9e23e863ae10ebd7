"""Central finite differences, used to verify the analytic backward rules."""
from typing import Callable, Dict, Mapping

import numpy as np

from .tensor import GradientTape, Tensor


def numerical_gradient(fn: Callable[[Dict[str, Tensor]], Tensor],
                       params: Mapping[str, Tensor],
                       name: str,
                       step: float = 1e-6) -> np.ndarray:
    """d fn / d params[name] by central differences, one element at a time"""
    base = params[name].data.astype(np.float64)
    grad = np.zeros(base.shape, dtype=np.float64)
    for index in np.ndindex(base.shape):
        values = {}
        for sign in (1.0, -1.0):
            bumped = base.copy()
            bumped[index] += sign * step
            trial = dict(params)
            trial[name] = Tensor(bumped, dtype=np.float64)
            values[sign] = float(fn(trial).data)
        grad[index] = (values[1.0] - values[-1.0]) / (2.0 * step)
    return grad


def analytic_gradient(fn: Callable[[Dict[str, Tensor]], Tensor],
                      params: Mapping[str, Tensor]) -> Dict[str, np.ndarray]:
    with GradientTape() as tape:
        loss = fn(dict(params))
    return tape.gradient(loss, params)


def max_relative_error(analytic: np.ndarray, numeric: np.ndarray, floor: float = 1e-4) -> float:
    """max |a - n| / max(|a|, |n|, floor) over all elements"""
    a = np.asarray(analytic, dtype=np.float64)
    n = np.asarray(numeric, dtype=np.float64)
    denom = np.maximum(np.maximum(np.abs(a), np.abs(n)), floor)
    return float(np.max(np.abs(a - n) / denom)) if a.size else 0.0


def check_gradients(fn: Callable[[Dict[str, Tensor]], Tensor],
                    params: Mapping[str, Tensor],
                    step: float = 1e-6) -> Dict[str, float]:
    """Max relative error per parameter between the tape and finite differences"""
    analytic = analytic_gradient(fn, params)
    return {
        name: max_relative_error(analytic[name], numerical_gradient(fn, params, name, step))
        for name in params
    }
