from dataclasses import dataclass

import numpy as np

from errors import CheckpointError, TrainingError
from network.params import ModelParams


BETA1 = 0.9
BETA2 = 0.999
EPSILON = 1e-8


@dataclass
class AdamState:
    """First/second moments per parameter name plus the update counter."""
    m: dict
    v: dict
    step: int = 0
    beta1: float = BETA1
    beta2: float = BETA2
    eps: float = EPSILON

    @classmethod
    def zeros(cls, params):
        return cls(m={k: np.zeros_like(a) for k, a in params.arrays.items()},
                   v={k: np.zeros_like(a) for k, a in params.arrays.items()})

    def to_extra(self):
        extra = {f"adam.m.{k}": a for k, a in self.m.items()}
        extra.update({f"adam.v.{k}": a for k, a in self.v.items()})
        extra["adam.step"] = np.array(float(self.step))
        return extra

    @classmethod
    def from_extra(cls, extra, params):
        try:
            m = {k: np.array(extra[f"adam.m.{k}"]) for k in params.arrays}
            v = {k: np.array(extra[f"adam.v.{k}"]) for k in params.arrays}
            step = int(extra["adam.step"])
        except KeyError as e:
            raise CheckpointError(f"checkpoint has no optimizer tensor {e.args[0]!r}") from None
        for k, a in params.arrays.items():
            if m[k].shape != a.shape or v[k].shape != a.shape:
                raise CheckpointError(f"optimizer moments for {k} do not match the parameter shape {a.shape}")
        return cls(m=m, v=v, step=step)


def global_norm(grads):
    return float(np.sqrt(sum(float((g * g).sum()) for g in grads.values())))


def clip_global_norm(grads, max_norm):
    """Rescale all gradients together when their joint norm exceeds ``max_norm``."""
    total = global_norm(grads)
    if total <= max_norm:
        return grads, total, False
    scale = max_norm / total
    return {k: g * scale for k, g in grads.items()}, total, True


def adam_step(params, grads, state, lr):
    """One bias-corrected Adam update; returns new params and state."""
    for name, g in grads.items():
        if not np.all(np.isfinite(g)):
            raise TrainingError(f"non-finite gradient for parameter {name}")
        if g.shape != params[name].shape:
            raise TrainingError(f"gradient for {name} has shape {g.shape}, expected {params[name].shape}")

    step = state.step + 1
    b1, b2 = state.beta1, state.beta2
    arrays, m_new, v_new = {}, {}, {}
    for name, value in params.arrays.items():
        g = grads.get(name)
        if g is None:
            g = np.zeros_like(value)
        m = b1 * state.m[name] + (1.0 - b1) * g
        v = b2 * state.v[name] + (1.0 - b2) * g * g
        m_hat = m / (1.0 - b1 ** step)
        v_hat = v / (1.0 - b2 ** step)
        arrays[name] = value - lr * m_hat / (np.sqrt(v_hat) + state.eps)
        m_new[name], v_new[name] = m, v
    return ModelParams(arrays), AdamState(m=m_new, v=v_new, step=step,
                                          beta1=b1, beta2=b2, eps=state.eps)
