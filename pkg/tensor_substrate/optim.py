from dataclasses import dataclass, field, replace
from typing import Dict, Mapping, Optional, Tuple

import numpy as np

import conf
from tensor_substrate.nn import Parameter


@dataclass(frozen=True)
class AdamState:
    lr: float = conf.LEARNING_RATE
    beta1: float = conf.ADAM_BETA1
    beta2: float = conf.ADAM_BETA2
    eps: float = conf.ADAM_EPS
    step: int = 0
    m: Dict[str, np.ndarray] = field(default_factory=dict)
    v: Dict[str, np.ndarray] = field(default_factory=dict)


def adam_step(params: Mapping[str, np.ndarray], grads: Mapping[str, Optional[np.ndarray]],
              state: AdamState) -> Tuple[Dict[str, np.ndarray], AdamState]:
    """
    One bias-corrected Adam update.

    Pure: ``params`` and ``state`` are left untouched and the updated copies are
    returned. A parameter without a gradient is treated as having a zero gradient.
    """
    step = state.step + 1
    correction1 = 1.0 - state.beta1 ** step
    correction2 = 1.0 - state.beta2 ** step
    new_params, new_m, new_v = {}, {}, {}
    for name, value in params.items():
        grad = grads.get(name)
        grad = np.zeros_like(value) if grad is None else grad.astype(value.dtype)
        m = state.m.get(name, np.zeros_like(value))
        v = state.v.get(name, np.zeros_like(value))
        m = state.beta1 * m + (1.0 - state.beta1) * grad
        v = state.beta2 * v + (1.0 - state.beta2) * grad * grad
        update = state.lr * (m / correction1) / (np.sqrt(v / correction2) + state.eps)
        new_params[name] = (value - update).astype(value.dtype)
        new_m[name], new_v[name] = m.astype(value.dtype), v.astype(value.dtype)
    return new_params, replace(state, step=step, m=new_m, v=new_v)


class Adam:
    """Applies :func:`adam_step` to a set of named parameters in place."""

    def __init__(self, params: Mapping[str, Parameter], lr: float = conf.LEARNING_RATE,
                 betas: Tuple[float, float] = (conf.ADAM_BETA1, conf.ADAM_BETA2), eps: float = conf.ADAM_EPS):
        self.params = dict(params)
        self.state = AdamState(lr=lr, beta1=betas[0], beta2=betas[1], eps=eps)

    def step(self):
        values = {name: p.data for name, p in self.params.items()}
        grads = {name: p.grad for name, p in self.params.items()}
        updated, self.state = adam_step(values, grads, self.state)
        for name, parameter in self.params.items():
            parameter.data = updated[name]

    def zero_grad(self):
        for parameter in self.params.values():
            parameter.grad = None
