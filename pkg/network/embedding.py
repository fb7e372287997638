from autodiff import concat, mul, reshape, segment_sum, take
from network.params import mlp


def edge_features(inputs, p, f):
    """e'_ij = [f_i, f_j, f_e(e_ij), RBF(|z_i - z_j|)] for every directed edge."""
    return concat([
        take(f, inputs.src),
        take(f, inputs.dst),
        take(p["embed.f_e"], inputs.edge_type),
        inputs.edge_rbf,
    ], axis=-1)


def embed_graph(inputs, p, config):
    """Layer-0 scalars ``(B, N, h)`` and vectors ``(B, N, 3, h)``."""
    b, n, h = inputs.batch_size, inputs.n_max, config.h
    slots = b * n
    f = (take(p["embed.f_b"], inputs.block_code)
         + take(p["embed.f_a"], inputs.atom_code)
         + mul(take(p["embed.f_p"], inputs.pos_code), inputs.pos_keep))

    e = edge_features(inputs, p, f)
    messages = mul(mlp(p, "embed.phi_s", e), take(f, inputs.dst))
    neighbours = segment_sum(messages, inputs.src, slots)
    h0 = mlp(p, "embed.phi_h", concat([f, neighbours], axis=-1))
    h0 = mul(reshape(h0, (b, n, h)), inputs.mask[:, :, None])

    weights = reshape(mlp(p, "embed.phi_v", e), (-1, 1, h))
    vectors = mul(weights, inputs.edge_vec[:, :, None])
    v0 = reshape(segment_sum(vectors, inputs.src, slots), (b, n, 3, h))
    return h0, v0
