"""Adam optimizer on named parameter dictionaries."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError


@dataclass
class AdamState:
    """Optimizer state: per-parameter moment accumulators and a step count.

    beta1/beta2/eps follow the optimizer's usual defaults; only the learning
    rate is a tuned setting here.
    """

    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)


def adam_step(params: dict[str, np.ndarray], grads: dict[str, np.ndarray], state: AdamState):
    """One bias-corrected Adam update, applied in place.

    Moments for parameters not seen before start at zero. Deterministic
    given (params, grads, state). Returns (params, state) for convenience.
    """
    for name, p in params.items():
        if name not in grads:
            raise DimensionError(f"no gradient supplied for parameter {name!r}")
        g = grads[name]
        if g.shape != p.shape:
            raise DimensionError(
                f"gradient shape {g.shape} does not match parameter {name!r} shape {p.shape}"
            )
    state.step += 1
    t = state.step
    b1, b2 = state.beta1, state.beta2
    correct1 = 1.0 - b1**t
    correct2 = 1.0 - b2**t
    for name, p in params.items():
        g = grads[name].astype(p.dtype, copy=False)
        m = state.m.get(name)
        if m is None:
            m = np.zeros_like(p)
            state.m[name] = m
            state.v[name] = np.zeros_like(p)
        v = state.v[name]
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * (g * g)
        m_hat = m / correct1
        v_hat = v / correct2
        p -= state.lr * m_hat / (np.sqrt(v_hat) + state.eps)
    return params, state


def clip_gradients(grads: dict[str, np.ndarray], max_norm: float) -> float:
    """Scale all gradients so their global l2 norm is at most max_norm.

    Off by default in training; exposed as a config knob. Returns the norm
    before clipping.
    """
    total = 0.0
    for g in grads.values():
        total += float(np.sum(g.astype(np.float64) ** 2))
    norm = float(np.sqrt(total))
    if norm > max_norm and norm > 0.0:
        factor = max_norm / norm
        for g in grads.values():
            g *= factor
    return norm
