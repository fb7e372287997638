from network.attention import ScratchCounter, attention_layer, streaming_softmax, tiled_attention
from network.backbone import FeatureState, forward, predict_forces, predict_property
from network.checkpoint import Checkpoint, load_checkpoint, save_checkpoint
from network.embedding import embed_graph
from network.ffn import ffn_layer
from network.heads import POOL_MODES, force_head, pooled_head
from network.inputs import GraphInputs, prepare_inputs
from network.params import ModelParams, mlp, parameter_shapes
from network.rbf import rbf_derivative, rbf_expand

__all__ = [
    "Checkpoint", "FeatureState", "GraphInputs", "ModelParams", "POOL_MODES", "ScratchCounter",
    "attention_layer", "embed_graph", "ffn_layer", "force_head", "forward", "load_checkpoint",
    "mlp", "parameter_shapes", "pooled_head", "predict_forces", "predict_property",
    "prepare_inputs", "rbf_derivative", "rbf_expand", "save_checkpoint", "streaming_softmax", "tiled_attention",
]
