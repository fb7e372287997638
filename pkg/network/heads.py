from autodiff import clamp_min, concat, div, matmul, mul, norm, reshape, segment_sum, sum_, take
from network.params import mlp

POOL_MODES = ("atom", "block", "graph")
VECTOR_FLOOR = 1e-8


def force_head(h, v, inputs, p):
    """Per-atom pseudo-forces ``(B, N, 3)`` from the last layer.

    Each vector channel is normalised with v / max(|v|, 1e-8), gated by
    phi_out([H, |V_out W1'|]) and summed over channels.
    """
    b, n, width = h.shape
    v_out = div(v, clamp_min(norm(v, axis=2, keepdims=True), VECTOR_FLOOR))
    magnitude = norm(matmul(v_out, p["head.force.w1"]), axis=2)
    gate = mlp(p, "head.force.phi_out", concat([h, magnitude], axis=-1))
    directions = matmul(v_out, p["head.force.w2"])
    forces = sum_(mul(reshape(gate, (b, n, 1, width)), directions), axis=-1)
    return mul(forces, inputs.mask[:, :, None])


def pooled_head(h, inputs, mode, p, readout=None):
    """Scalar prediction per graph, shape ``(B,)``.

    atom: sum_i phi_E(h_i); block: sum_b phi_E(sum_{j in b} h_j); graph: phi_E(sum_i h_i).
    ``readout`` replaces phi_E when given.
    """
    if mode not in POOL_MODES:
        raise ValueError(f"invalid head mode {mode!r}. Use one of: {', '.join(POOL_MODES)}")
    readout = readout or (lambda x: mlp(p, "head.pool.phi_e", x))
    b, n, width = h.shape
    real = take(reshape(h, (b * n, width)), inputs.real_slots)
    graph_of_atom = inputs.real_slots // n
    if mode == "atom":
        pooled = segment_sum(readout(real), graph_of_atom, b)
    elif mode == "block":
        blocks = segment_sum(real, inputs.block_ids, inputs.n_blocks)
        pooled = segment_sum(readout(blocks), inputs.graph_of_block, b)
    else:
        pooled = readout(segment_sum(real, graph_of_atom, b))
    return reshape(pooled, (b,))
