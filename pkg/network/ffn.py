from autodiff import concat, index, layer_norm, matmul, mul, norm, reshape
from network.params import mlp


def ffn_layer(h_norm, v, p, layer, config):
    """Fuse scalars with vector magnitudes; returns ``(dH, dV)``.

    V1, V2 = V W1, V W2; (dH, U) = phi_FFN(H, |V1|); dV = LN(U) * V2.
    The norm runs over the three spatial components of each channel.
    """
    b, n, h = h_norm.shape
    prefix = f"layers.{layer}.ffn"
    v1 = matmul(v, p[f"{prefix}.w1"])
    v2 = matmul(v, p[f"{prefix}.w2"])
    fused = mlp(p, f"{prefix}.phi_ffn", concat([h_norm, norm(v1, axis=2)], axis=-1))
    delta_h = index(fused, (Ellipsis, slice(0, h)))
    u = index(fused, (Ellipsis, slice(h, 2 * h)))
    u = layer_norm(u, p[f"{prefix}.ln_u.gamma"], p[f"{prefix}.ln_u.beta"], config.ln_eps)
    delta_v = mul(reshape(u, (b, n, 1, h)), v2)
    return delta_h, delta_v
