"""SGD, heavy-ball momentum and Adam, plus a step-decay learning-rate schedule.

Updates are applied in place. Complex parameters are handled by viewing
them as interleaved float64 arrays, so every rule acts independently on
real and imaginary parts.
"""

from dataclasses import dataclass, field

import numpy as np

RULES = ("sgd", "momentum", "adam")


@dataclass
class OptimizerState:
    rule: str = "sgd"
    lr: float = 0.01
    weight_decay: float = 0.0
    momentum: float = 0.9
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    buffers: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.rule not in RULES:
            raise ValueError(f"unknown rule {self.rule!r}; expected one of {RULES}")


def _real_view(a: np.ndarray) -> np.ndarray:
    if np.iscomplexobj(a):
        if not a.flags.c_contiguous:
            raise ValueError("complex parameters must be C-contiguous")
        return a.view(np.float64)
    return a


def _decayed(param, grad, state, decay):
    if decay and state.weight_decay:
        return grad + state.weight_decay * param
    return grad


def sgd_step(param, grad, state: OptimizerState, key=0, decay=True):
    p = _real_view(param)
    g = _decayed(p, _real_view(np.asarray(grad)), state, decay)
    p -= state.lr * g
    return param


def momentum_step(param, grad, state: OptimizerState, key=0, decay=True):
    p = _real_view(param)
    g = _decayed(p, _real_view(np.asarray(grad)), state, decay)
    v = state.buffers.get(key)
    if v is None:
        v = state.buffers[key] = np.zeros_like(p)
    v *= state.momentum
    v += g
    p -= state.lr * v
    return param


def adam_step(param, grad, state: OptimizerState, key=0, decay=True):
    p = _real_view(param)
    g = _decayed(p, _real_view(np.asarray(grad)), state, decay)
    buf = state.buffers.get(key)
    if buf is None:
        buf = state.buffers[key] = {"m": np.zeros_like(p), "v": np.zeros_like(p), "t": 0}
    buf["t"] += 1
    t = buf["t"]
    b1, b2 = state.beta1, state.beta2
    buf["m"] = b1 * buf["m"] + (1.0 - b1) * g
    buf["v"] = b2 * buf["v"] + (1.0 - b2) * g * g
    m_hat = buf["m"] / (1.0 - b1 ** t)
    v_hat = buf["v"] / (1.0 - b2 ** t)
    p -= state.lr * m_hat / (np.sqrt(v_hat) + state.eps)
    return param


_STEPS = {"sgd": sgd_step, "momentum": momentum_step, "adam": adam_step}


def apply_update(params, grads, state: OptimizerState) -> None:
    """Update every ``(key, array, decay)`` in ``params`` with its gradient from ``grads[key]``."""
    step = _STEPS[state.rule]
    for key, array, decay in params:
        step(array, grads[key], state, key=key, decay=decay)


@dataclass
class LrSchedule:
    initial: float
    milestones: list = field(default_factory=list)  # [(epoch, factor), ...]

    def __post_init__(self):
        epochs = [int(e) for e, _ in self.milestones]
        if any(b <= a for a, b in zip(epochs, epochs[1:])):
            raise ValueError("milestone epochs must be strictly increasing")


def schedule_lr(sched: LrSchedule, epoch: int) -> float:
    lr = sched.initial
    for at, factor in sched.milestones:
        if epoch >= at:
            lr *= factor
    return lr
