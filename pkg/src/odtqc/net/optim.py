"""ADAM with bias correction."""
from dataclasses import dataclass

import numpy as np


@dataclass(eq=False)
class AdamState:
    m: list
    v: list
    t: int = 0

    @classmethod
    def fresh(cls, params):
        ts = params.tensors() if hasattr(params, "tensors") else params
        return cls([np.zeros_like(p) for p in ts], [np.zeros_like(p) for p in ts], 0)


def adam_step(params, grads, state: AdamState, lr=1e-4, betas=(0.9, 0.999), eps=1e-8):
    """Update ``params`` in place and return (params, state).

    ``params`` and ``grads`` are NetParams or plain lists of arrays.
    """
    ps = params.tensors() if hasattr(params, "tensors") else params
    gs = grads.tensors() if hasattr(grads, "tensors") else grads
    if len(ps) != len(gs) or len(ps) != len(state.m):
        raise ValueError("parameter, gradient and state lists differ in length")
    b1, b2 = betas
    state.t += 1
    c1 = 1.0 - b1 ** state.t
    c2 = 1.0 - b2 ** state.t
    for p, g, m, v in zip(ps, gs, state.m, state.v):
        if p.shape != g.shape or p.shape != m.shape:
            raise ValueError(f"shape mismatch {p.shape} / {g.shape} / {m.shape}")
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * g * g
        p -= lr * (m / c1) / (np.sqrt(v / c2) + eps)
    return params, state
