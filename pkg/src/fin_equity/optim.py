"""AdamW with decoupled weight decay, updating numpy arrays in place.

The decay is applied as a separate multiplicative shrink, never through the
gradient moments:

    theta <- theta * (1 - lr * wd)          (decay-masked parameters only)
    theta <- theta - lr * mhat / (sqrt(vhat) + eps)

By default only affine weights decay; biases and normalizer parameters are
excluded.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import NonFiniteError, ValidationError


def default_decay_mask(name: str) -> bool:
    """Decay affine weights only: no biases, no normalizer parameters."""
    return name.endswith(".w") and not name.startswith("norm.")


@dataclass
class AdamWConfig:
    lr: float = 5e-5
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    weight_decay: float = 0.0
    decay_mask: Callable[[str], bool] | None = None  # None -> default_decay_mask

    def __post_init__(self):
        if self.lr <= 0:
            raise ValidationError(f"lr must be > 0, got {self.lr}")
        if not (0.0 <= self.beta1 < 1.0 and 0.0 <= self.beta2 < 1.0):
            raise ValidationError(
                f"betas must lie in [0, 1), got ({self.beta1}, {self.beta2})"
            )
        if self.eps <= 0:
            raise ValidationError(f"eps must be > 0, got {self.eps}")
        if self.weight_decay < 0:
            raise ValidationError(f"weight_decay must be >= 0, got {self.weight_decay}")


@dataclass
class AdamWState:
    step: int
    m: dict[str, np.ndarray]
    v: dict[str, np.ndarray]

    @classmethod
    def create(cls, params: dict[str, np.ndarray]) -> "AdamWState":
        return cls(
            step=0,
            m={k: np.zeros_like(p) for k, p in params.items()},
            v={k: np.zeros_like(p) for k, p in params.items()},
        )


def adamw_step(
    params: dict[str, np.ndarray],
    grads: dict[str, np.ndarray],
    state: AdamWState,
    config: AdamWConfig,
) -> tuple[dict[str, np.ndarray], AdamWState]:
    """One update over every named parameter; arrays are mutated in place.

    Fails fast on any non-finite gradient, naming the parameter block.
    """
    if set(params) != set(grads):
        raise ValidationError(
            f"parameter/gradient name mismatch: {sorted(set(params) ^ set(grads))}"
        )
    state.step += 1
    t = state.step
    bc1 = 1.0 - config.beta1 ** t
    bc2 = 1.0 - config.beta2 ** t
    mask = config.decay_mask if config.decay_mask is not None else default_decay_mask
    shrink = 1.0 - config.lr * config.weight_decay
    for name, p in params.items():
        g = grads[name]
        if g.shape != p.shape:
            raise ValidationError(
                f"gradient shape {g.shape} != parameter shape {p.shape} for {name}"
            )
        if not np.all(np.isfinite(g)):
            raise NonFiniteError(f"non-finite gradient in parameter block {name!r}")
        m = state.m[name]
        v = state.v[name]
        m *= config.beta1
        m += (1.0 - config.beta1) * g
        v *= config.beta2
        v += (1.0 - config.beta2) * (g * g)
        step_vec = config.lr * (m / bc1) / (np.sqrt(v / bc2) + config.eps)
        if config.weight_decay and mask(name):
            p *= shrink
        p -= step_vec
    return params, state
