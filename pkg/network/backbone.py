from dataclasses import dataclass, field

from autodiff import add, layer_norm, mul
from network.attention import attention_layer, tiled_attention
from network.embedding import embed_graph
from network.ffn import ffn_layer
from network.heads import force_head, pooled_head
from network.inputs import GraphInputs, prepare_inputs


@dataclass
class FeatureState:
    """Scalars ``(B, N, h)`` and vectors ``(B, N, 3, h)``; padded slots are zero."""
    h: object
    v: object
    layers: list = field(default_factory=list)


def _pre_norm(h, p, name, config):
    return layer_norm(h, p[f"{name}.gamma"], p[f"{name}.beta"], config.ln_eps)


def forward(graphs, p, config, tile=None, keep_layers=False, counter=None):
    """Embedding followed by L pre-LN attention and FFN blocks with residuals.

    ``graphs`` is a MolGraph, GraphBatch or prepared GraphInputs; ``p`` maps
    parameter names to tensors. ``tile`` selects the streaming kernel.
    """
    inputs = graphs if isinstance(graphs, GraphInputs) else prepare_inputs(graphs, config)
    mask_h = inputs.mask[:, :, None]
    mask_v = inputs.mask[:, :, None, None]
    h, v = embed_graph(inputs, p, config)
    layers = [(h, v)] if keep_layers else []

    for l in range(config.L):
        h_norm = _pre_norm(h, p, f"layers.{l}.ln_attn", config)
        if tile is None:
            dh, dv = attention_layer(h_norm, v, inputs, p, l, config, counter)
        else:
            dh, dv = tiled_attention(h_norm, v, inputs, p, l, config, tile, counter)
        h = add(h, mul(dh, mask_h))
        v = add(v, mul(dv, mask_v))

        h_norm = _pre_norm(h, p, f"layers.{l}.ln_ffn", config)
        dh, dv = ffn_layer(h_norm, v, p, l, config)
        h = add(h, mul(dh, mask_h))
        v = add(v, mul(dv, mask_v))
        if keep_layers:
            layers.append((h, v))

    return inputs, FeatureState(h=h, v=v, layers=layers)


def predict_forces(graphs, p, config, tile=None):
    inputs, state = forward(graphs, p, config, tile=tile)
    return inputs, state, force_head(state.h, state.v, inputs, p)


def predict_property(graphs, p, config, mode):
    inputs, state = forward(graphs, p, config)
    return inputs, state, pooled_head(state.h, inputs, mode, p)
