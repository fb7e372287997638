import numpy as np

from errors import CapacityError
from models import GraphBatch
from molio.vocab import PAD


def collate(graphs):
    """Pad graphs to a common atom count."""
    if not graphs:
        raise ValueError("cannot collate an empty list of graphs")
    b = len(graphs)
    n_max = max(g.n_atoms for g in graphs)
    atom_code = np.full((b, n_max), PAD, dtype=np.int64)
    pos_code = np.full((b, n_max), PAD, dtype=np.int64)
    atom_block_code = np.full((b, n_max), PAD, dtype=np.int64)
    block_index = np.full((b, n_max), -1, dtype=np.int64)
    coords = np.zeros((b, n_max, 3))
    mask = np.zeros((b, n_max), dtype=bool)
    block_offsets = np.zeros(b + 1, dtype=np.int64)
    edge_batch, edge_src, edge_dst, edge_type = [], [], [], []

    for k, g in enumerate(graphs):
        n = g.n_atoms
        atom_code[k, :n] = g.atom_code
        pos_code[k, :n] = g.pos_code
        atom_block_code[k, :n] = g.block_code[g.block_of]
        block_index[k, :n] = g.block_of + block_offsets[k]
        coords[k, :n] = g.coords
        mask[k, :n] = True
        block_offsets[k + 1] = block_offsets[k] + g.n_blocks
        edge_batch.append(np.full(len(g.edges), k, dtype=np.int64))
        edge_src.append(g.edges[:, 0])
        edge_dst.append(g.edges[:, 1])
        edge_type.append(g.edges[:, 2])

    return GraphBatch(
        atom_code=atom_code,
        pos_code=pos_code,
        atom_block_code=atom_block_code,
        block_index=block_index,
        coords=coords,
        mask=mask,
        edge_batch=np.concatenate(edge_batch),
        edge_src=np.concatenate(edge_src),
        edge_dst=np.concatenate(edge_dst),
        edge_type=np.concatenate(edge_type),
        block_code=np.concatenate([g.block_code for g in graphs]),
        block_chain=np.concatenate([g.block_chain for g in graphs]),
        block_offsets=block_offsets,
        sizes=np.array([g.n_atoms for g in graphs], dtype=np.int64),
        domains=[g.domain for g in graphs],
        names=[g.name for g in graphs],
    )


def plan_batches(sizes, max_vertices):
    """Group consecutive indices so each group's atom total stays within the cap."""
    groups, current, total = [], [], 0
    for idx, n in enumerate(sizes):
        if n > max_vertices:
            raise CapacityError(f"graph {idx} has {n} atoms, more than max_vertices={max_vertices}")
        if current and total + n > max_vertices:
            groups.append(current)
            current, total = [], 0
        current.append(idx)
        total += n
    if current:
        groups.append(current)
    return groups


def batch(graphs, max_vertices):
    """Pack graphs in input order into padded batches under the vertex cap."""
    return [collate([graphs[i] for i in group])
            for group in plan_batches([g.n_atoms for g in graphs], max_vertices)]


def unbatch_all(batches):
    return [g for b in batches for g in b.unbatch()]
