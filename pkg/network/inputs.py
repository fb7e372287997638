from dataclasses import dataclass
from functools import cached_property

import numpy as np

from blockgraph.batching import collate
from models import MolGraph
from molio.vocab import POS_SML
from network.rbf import rbf_expand


@dataclass(frozen=True)
class GraphInputs:
    """Constant arrays a forward pass reads, flattened over ``B * N`` slots.

    ``src``/``dst`` are flat slot indices of each directed edge, ``pair`` the
    flat index into a ``B * N * N`` attention grid.
    """
    batch: object
    mask: np.ndarray
    block_code: np.ndarray
    atom_code: np.ndarray
    pos_code: np.ndarray
    pos_keep: np.ndarray
    coords: np.ndarray
    src: np.ndarray
    dst: np.ndarray
    pair: np.ndarray
    edge_type: np.ndarray
    edge_vec: np.ndarray
    edge_rbf: np.ndarray
    key_bias: np.ndarray
    real_slots: np.ndarray
    block_ids: np.ndarray
    graph_of_block: np.ndarray

    @cached_property
    def distances(self):
        """Dense ``(B, N, N)`` distance matrix, built on first use."""
        diff = self.coords[:, :, None, :] - self.coords[:, None, :, :]
        return np.sqrt((diff * diff).sum(-1))

    @property
    def batch_size(self):
        return self.mask.shape[0]

    @property
    def n_max(self):
        return self.mask.shape[1]

    @property
    def n_blocks(self):
        return len(self.graph_of_block)


def prepare_inputs(graphs, config):
    """Accepts a MolGraph (a batch of one) or a GraphBatch."""
    batch = collate([graphs]) if isinstance(graphs, MolGraph) else graphs
    b, n = batch.atom_code.shape
    coords = batch.coords
    src = batch.edge_batch * n + batch.edge_src
    dst = batch.edge_batch * n + batch.edge_dst
    flat = coords.reshape(b * n, 3)
    edge_vec = flat[src] - flat[dst]
    edge_dist = np.sqrt((edge_vec * edge_vec).sum(-1))
    key_bias = np.where(batch.mask[:, None, None, :], 0.0, -np.inf)
    pos_keep = np.ones((b * n, 1))
    if config.omit_sml_pos:
        pos_keep[batch.pos_code.reshape(-1) == POS_SML] = 0.0
    graph_of_block = np.repeat(np.arange(b), np.diff(batch.block_offsets))
    real_slots = np.flatnonzero(batch.mask.reshape(-1))
    return GraphInputs(
        batch=batch,
        mask=batch.mask.astype(np.float64),
        block_code=batch.atom_block_code.reshape(-1),
        atom_code=batch.atom_code.reshape(-1),
        pos_code=batch.pos_code.reshape(-1),
        pos_keep=pos_keep,
        coords=coords,
        src=src,
        dst=dst,
        pair=batch.edge_batch * n * n + batch.edge_src * n + batch.edge_dst,
        edge_type=batch.edge_type,
        edge_vec=edge_vec,
        edge_rbf=rbf_expand(edge_dist, config.h_rbf, config.delta_max),
        key_bias=key_bias,
        real_slots=real_slots,
        block_ids=batch.block_index.reshape(-1)[real_slots],
        graph_of_block=graph_of_block,
    )
