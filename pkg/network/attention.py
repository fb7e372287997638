"""Equivariant multi-head self-attention.

Per head s: Q_s = H W_Q, K_s = H W_K (4*h_s wide), values [H W_Vh, V W_Vv].
Logits are Q_s K_s^T / (2 sqrt(h_s)) - D + R, where R is phi_r on edges and
zero elsewhere; padded key columns are -inf. Scalar and vector values share
the weights, and heads merge through W_Oh / W_Ov.
"""
import logging

import numpy as np

from autodiff import (
    Tensor,
    add,
    concat,
    index,
    matmul,
    reshape,
    segment_sum,
    softmax_rows,
    sum_,
    take,
    transpose,
)
from network.params import mlp

logger = logging.getLogger(__name__)


class ScratchCounter:
    """Tracks live bytes of attention scratch buffers and their peak.

    The dense kernel counts its distance matrix and every logit-sized
    intermediate; the streaming kernel counts the same per tile, plus its
    running state.
    """

    def __init__(self):
        self.current = 0
        self.peak = 0

    def allocate(self, *arrays):
        self.current += sum(a.nbytes for a in arrays)
        self.peak = max(self.peak, self.current)

    def release(self, *arrays):
        self.current -= sum(a.nbytes for a in arrays)


def edge_bias(inputs, p, layer):
    """Per-edge r_ij from phi_r([f_e(e_ij), RBF(d_ij)]); one scalar shared by all heads."""
    x = concat([take(p["embed.f_e"], inputs.edge_type), inputs.edge_rbf], axis=-1)
    return mlp(p, f"layers.{layer}.attn.phi_r", x)


def project(h_norm, v, p, layer, config):
    """Queries, keys and concatenated values, each ``(B, S, N, 4*h_s)``."""
    b, n, h = h_norm.shape
    hs = config.h_s
    prefix = f"layers.{layer}.attn"
    hx = reshape(h_norm, (b, 1, n, h))
    q = matmul(hx, p[f"{prefix}.w_q"])
    k = matmul(hx, p[f"{prefix}.w_k"])
    vh = matmul(hx, p[f"{prefix}.w_vh"])
    vv = matmul(reshape(v, (b, 1, n * 3, h)), p[f"{prefix}.w_vv"])
    vv = reshape(vv, (b, config.S, n, 3 * hs))
    return q, k, concat([vh, vv], axis=-1)


def merge_heads(out, p, layer, config):
    """Split attended values back into scalars and vectors and apply W_Oh / W_Ov."""
    b, s, n, _ = out.shape
    hs = config.h_s
    prefix = f"layers.{layer}.attn"
    h_heads = matmul(index(out, (Ellipsis, slice(0, hs))), p[f"{prefix}.w_oh"])
    v_flat = reshape(index(out, (Ellipsis, slice(hs, 4 * hs))), (b, s, n * 3, hs))
    v_heads = matmul(v_flat, p[f"{prefix}.w_ov"])
    delta_h = sum_(h_heads, axis=1)
    delta_v = reshape(sum_(v_heads, axis=1), (b, n, 3, config.h))
    return delta_h, delta_v


def attention_layer(h_norm, v, inputs, p, layer, config, counter=None):
    """Dense kernel: materialises the full ``(B, S, N, N)`` logits."""
    b, n = inputs.batch_size, inputs.n_max
    q, k, values = project(h_norm, v, p, layer, config)
    r = reshape(segment_sum(edge_bias(inputs, p, layer), inputs.pair, b * n * n), (b, 1, n, n))
    bias = inputs.key_bias - inputs.distances[:, None]
    scores = matmul(q, transpose(k, (0, 1, 3, 2))) / (2.0 * np.sqrt(config.h_s))
    logits = add(add(scores, r), bias)
    weights = softmax_rows(logits)
    scratch = (inputs.distances, r.data, bias, scores.data, logits.data, weights.data)
    if counter is not None:
        counter.allocate(*scratch)
    out = matmul(weights, values)
    if counter is not None:
        counter.release(*scratch)
    return merge_heads(out, p, layer, config)


def _sorted_by_key(inputs):
    order = np.argsort(inputs.dst % inputs.n_max, kind="stable")
    return order, (inputs.dst % inputs.n_max)[order]


def streaming_softmax(q, k, values, inputs, r_edge, tile, counter=None, rescale=True):
    """Softmax(QK^T/scale + bias) @ values over key tiles with a running max and sum.

    Bias tiles (-D + R + padding) are built per tile from the coordinates and
    the edge list, so no ``N x N`` buffer exists. Rows whose keys are all
    masked return zeros.
    """
    b, s, n, width = q.shape
    scale = 2.0 * np.sqrt(width / 4.0)
    order, keys = _sorted_by_key(inputs)
    edge_batch = inputs.src // n
    edge_query = inputs.src % n
    running_max = np.full((b, s, n), -np.inf)
    running_sum = np.zeros((b, s, n))
    acc = np.zeros((b, s, n, values.shape[-1]))
    coords = inputs.coords
    if counter is not None:
        counter.allocate(running_max, running_sum, acc)

    for start in range(0, n, tile):
        stop = min(start + tile, n)
        diff = coords[:, :, None, :] - coords[:, None, start:stop, :]
        bias = -np.sqrt((diff * diff).sum(-1)) + inputs.key_bias[:, 0, :, start:stop]
        lo, hi = np.searchsorted(keys, [start, stop])
        sel = order[lo:hi]
        np.add.at(bias, (edge_batch[sel], edge_query[sel], keys[lo:hi] - start), r_edge[sel])

        scores = np.matmul(q, np.swapaxes(k[:, :, start:stop], -1, -2)) / scale
        logits = scores + bias[:, None]
        tile_max = logits.max(axis=-1)
        new_max = np.maximum(running_max, tile_max)
        safe = np.where(np.isfinite(new_max), new_max, 0.0)
        weights = np.exp(logits - safe[..., None])
        if counter is not None:
            counter.allocate(diff, bias, scores, logits, weights)
        correction = np.exp(running_max - safe) if rescale else np.ones_like(safe)
        running_sum = running_sum * correction + weights.sum(axis=-1)
        acc = acc * correction[..., None] + np.matmul(weights, values[:, :, start:stop])
        running_max = new_max
        if counter is not None:
            counter.release(diff, bias, scores, logits, weights)

    out = np.zeros_like(acc)
    np.divide(acc, running_sum[..., None], out=out, where=running_sum[..., None] > 0)
    if counter is not None:
        counter.release(running_max, running_sum, acc)
    return out


def tiled_attention(h_norm, v, inputs, p, layer, config, tile, counter=None, rescale=True):
    """Forward-only streaming kernel; peak scratch is O(N * tile) per head."""
    if tile < 1:
        raise ValueError(f"tile must be >= 1, got {tile}")
    q, k, values = project(h_norm, v, p, layer, config)
    r_edge = edge_bias(inputs, p, layer).data[:, 0]
    out = streaming_softmax(q.data, k.data, values.data, inputs, r_edge, tile, counter, rescale)
    logger.debug("tiled attention layer %d: N=%d tile=%d", layer, inputs.n_max, tile)
    return merge_heads(Tensor(out), p, layer, config)
