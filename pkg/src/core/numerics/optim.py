from dataclasses import dataclass, field, replace
from typing import Dict, Mapping, Tuple

import numpy as np

from utils.errors import ShapeError
from .tensor import Tensor


@dataclass(frozen=True)
class AdamState:
    """Adam moments and hyperparameters; ``step`` counts completed updates"""
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    step: int = 0
    first_moment: Dict[str, np.ndarray] = field(default_factory=dict)
    second_moment: Dict[str, np.ndarray] = field(default_factory=dict)

    @classmethod
    def create(cls, params: Mapping[str, Tensor], learning_rate: float = 1e-3,
               beta1: float = 0.9, beta2: float = 0.999, epsilon: float = 1e-8) -> 'AdamState':
        return cls(
            learning_rate=learning_rate,
            beta1=beta1,
            beta2=beta2,
            epsilon=epsilon,
            first_moment={name: np.zeros(t.shape, dtype=np.float64) for name, t in params.items()},
            second_moment={name: np.zeros(t.shape, dtype=np.float64) for name, t in params.items()},
        )


def adam_step(state: AdamState, grads: Mapping[str, np.ndarray],
              params: Mapping[str, Tensor]) -> Tuple[Dict[str, Tensor], AdamState]:
    """One bias-corrected Adam update; returns new parameter tensors and the next state"""
    step = state.step + 1
    bc1 = 1.0 - state.beta1 ** step
    bc2 = 1.0 - state.beta2 ** step

    new_params: Dict[str, Tensor] = {}
    first: Dict[str, np.ndarray] = {}
    second: Dict[str, np.ndarray] = {}
    for name, param in params.items():
        g = np.asarray(grads[name], dtype=np.float64)
        if g.shape != param.shape:
            raise ShapeError(f"gradient for {name} has shape {g.shape}, parameter has {param.shape}")
        m_prev = state.first_moment.get(name)
        v_prev = state.second_moment.get(name)
        if m_prev is None:
            m_prev = np.zeros(param.shape, dtype=np.float64)
            v_prev = np.zeros(param.shape, dtype=np.float64)
        elif m_prev.shape != param.shape:
            raise ShapeError(f"moment for {name} has shape {m_prev.shape}, parameter has {param.shape}")

        m = state.beta1 * m_prev + (1.0 - state.beta1) * g
        v = state.beta2 * v_prev + (1.0 - state.beta2) * (g * g)
        update = state.learning_rate * (m / bc1) / (np.sqrt(v / bc2) + state.epsilon)
        values = param.data.astype(np.float64) - update
        new_params[name] = Tensor(values.astype(param.dtype), name=param.name)
        first[name] = m
        second[name] = v

    return new_params, replace(state, step=step, first_moment=first, second_moment=second)


def global_norm(grads: Mapping[str, np.ndarray]) -> float:
    total = 0.0
    for name in grads:
        total += float(np.sum(np.square(grads[name], dtype=np.float64)))
    return float(np.sqrt(total))


def clip_by_global_norm(grads: Mapping[str, np.ndarray], max_norm: float) -> Tuple[Dict[str, np.ndarray], float]:
    """Scale all gradients together so their joint L2 norm is at most ``max_norm``"""
    norm = global_norm(grads)
    if max_norm <= 0 or norm <= max_norm:
        return dict(grads), norm
    scale = max_norm / norm
    return {name: g * scale for name, g in grads.items()}, norm
