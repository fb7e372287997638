"""Parameter layout, initialisation and the two-layer MLP used throughout."""
import numpy as np

from autodiff import Tensor, add, matmul, silu
from molio import vocab


def mlp_shapes(prefix, n_in, n_hidden, n_out):
    return [
        (f"{prefix}.w1", (n_in, n_hidden), n_in),
        (f"{prefix}.b1", (n_hidden,), n_in),
        (f"{prefix}.w2", (n_hidden, n_out), n_hidden),
        (f"{prefix}.b2", (n_out,), n_hidden),
    ]


def layer_shapes(config, l):
    h, he, hr, s, hs = config.h, config.h_edge, config.h_rbf, config.S, config.h_s
    p = f"layers.{l}"
    return [
        (f"{p}.ln_attn.gamma", (h,), None),
        (f"{p}.ln_attn.beta", (h,), None),
        (f"{p}.attn.w_q", (s, h, 4 * hs), h),
        (f"{p}.attn.w_k", (s, h, 4 * hs), h),
        (f"{p}.attn.w_vh", (s, h, hs), h),
        (f"{p}.attn.w_vv", (s, h, hs), h),
        (f"{p}.attn.w_oh", (s, hs, h), hs),
        (f"{p}.attn.w_ov", (s, hs, h), hs),
        *mlp_shapes(f"{p}.attn.phi_r", he + hr, he, 1),
        (f"{p}.ln_ffn.gamma", (h,), None),
        (f"{p}.ln_ffn.beta", (h,), None),
        (f"{p}.ffn.w1", (h, h), h),
        (f"{p}.ffn.w2", (h, h), h),
        *mlp_shapes(f"{p}.ffn.phi_ffn", 2 * h, config.h_ffn, 2 * h),
        (f"{p}.ffn.ln_u.gamma", (h,), None),
        (f"{p}.ffn.ln_u.beta", (h,), None),
    ]


def parameter_shapes(config):
    """Ordered ``(name, shape, fan_in)``; ``fan_in`` None marks a layer-norm parameter."""
    h, he, hr = config.h, config.h_edge, config.h_rbf
    edge_in = 2 * h + he + hr
    shapes = [
        ("embed.f_b", (vocab.BLOCK_VOCAB_SIZE, h), h),
        ("embed.f_a", (vocab.ATOM_VOCAB_SIZE, h), h),
        ("embed.f_p", (vocab.POS_VOCAB_SIZE, h), h),
        ("embed.f_e", (3, he), he),
        *mlp_shapes("embed.phi_s", edge_in, h, h),
        *mlp_shapes("embed.phi_v", edge_in, h, h),
        *mlp_shapes("embed.phi_h", 2 * h, h, h),
    ]
    for l in range(config.L):
        shapes.extend(layer_shapes(config, l))
    shapes.extend([
        ("head.force.w1", (h, h), h),
        ("head.force.w2", (h, h), h),
        *mlp_shapes("head.force.phi_out", 2 * h, h, h),
        *mlp_shapes("head.pool.phi_e", h, h, 1),
    ])
    return shapes


class ModelParams:
    """Named float64 arrays in a fixed order."""

    def __init__(self, arrays):
        self.arrays = {name: np.array(value, dtype=np.float64) for name, value in arrays.items()}

    @classmethod
    def initialize(cls, config, rng):
        arrays = {}
        for name, shape, fan_in in parameter_shapes(config):
            if fan_in is None:
                arrays[name] = np.ones(shape) if name.endswith("gamma") else np.zeros(shape)
            else:
                bound = 1.0 / np.sqrt(fan_in)
                arrays[name] = rng.uniform(-bound, bound, size=shape)
        return cls(arrays)

    def names(self):
        return list(self.arrays)

    def __getitem__(self, name):
        return self.arrays[name]

    def __len__(self):
        return len(self.arrays)

    def count(self):
        return int(sum(a.size for a in self.arrays.values()))

    def tensors(self, requires_grad=False):
        return {name: Tensor(a, requires_grad=requires_grad, name=name) for name, a in self.arrays.items()}

    def copy(self):
        return ModelParams(self.arrays)

    def check_shapes(self, config):
        expected = {name: shape for name, shape, _ in parameter_shapes(config)}
        if list(expected) != list(self.arrays):
            missing = sorted(set(expected) - set(self.arrays))
            extra = sorted(set(self.arrays) - set(expected))
            raise ValueError(f"parameter names differ from the model layout (missing {missing}, extra {extra})")
        for name, shape in expected.items():
            if self.arrays[name].shape != shape:
                raise ValueError(f"{name} has shape {self.arrays[name].shape}, expected {shape}")


def mlp(p, prefix, x):
    hidden = silu(add(matmul(x, p[f"{prefix}.w1"]), p[f"{prefix}.b1"]))
    return add(matmul(hidden, p[f"{prefix}.w2"]), p[f"{prefix}.b2"])
