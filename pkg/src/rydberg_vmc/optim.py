"""Adam parameter updates with bias correction."""

from __future__ import annotations

import numpy as np

from .autodiff import Tensor

__all__ = ["AdamState", "adam_update", "TrainingFault"]


class TrainingFault(RuntimeError):
    """Non-finite numbers reached the optimizer or the loss."""


class AdamState:
    """First/second-moment accumulators, one pair per parameter block."""

    def __init__(self, params: dict[str, Tensor]):
        self.t = 0
        self.m = {k: np.zeros_like(p.value) for k, p in params.items()}
        self.v = {k: np.zeros_like(p.value) for k, p in params.items()}


def adam_update(
    params: dict[str, Tensor],
    grads: dict[str, np.ndarray],
    state: AdamState,
    lr: float = 0.0005,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
) -> None:
    """One in-place Adam step over named parameter blocks.

    ``update = -lr * m_hat / (sqrt(v_hat) + eps)`` with the standard
    bias corrections ``m_hat = m / (1 - beta1^t)``, ``v_hat = v / (1 - beta2^t)``.
    """
    state.t += 1
    c1 = 1.0 - beta1**state.t
    c2 = 1.0 - beta2**state.t
    for name, p in params.items():
        g = grads[name]
        if g.shape != p.value.shape:
            raise ValueError(
                f"gradient shape {g.shape} does not match parameter "
                f"'{name}' shape {p.value.shape}"
            )
        if not np.all(np.isfinite(g)):
            raise TrainingFault(f"non-finite gradient in parameter block '{name}'")
        m = state.m[name]
        v = state.v[name]
        m *= beta1
        m += (1.0 - beta1) * g
        v *= beta2
        v += (1.0 - beta2) * (g * g)
        p.value -= lr * (m / c1) / (np.sqrt(v / c2) + eps)
