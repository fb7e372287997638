import numpy as np

INTRA, TOPO, SPATIAL = 0, 1, 2
EDGE_TYPES = (INTRA, TOPO, SPATIAL)


def block_distance(coords, block_of, m_i, m_j):
    """Minimum distance between any atom of block ``m_i`` and any of block ``m_j``."""
    a = coords[block_of == m_i]
    b = coords[block_of == m_j]
    return float(np.sqrt(((a[:, None, :] - b[None, :, :]) ** 2).sum(-1)).min())


def block_distance_matrix(coords, block_of, n_blocks=None):
    """All block-to-block minimum distances, one block of rows at a time."""
    m = int(block_of.max()) + 1 if n_blocks is None else n_blocks
    order = np.argsort(block_of, kind="stable")
    sorted_coords = coords[order]
    starts = np.searchsorted(block_of[order], np.arange(m))
    out = np.zeros((m, m))
    for a in range(m):
        rows = coords[block_of == a]
        d = np.sqrt(((rows[:, None, :] - sorted_coords[None, :, :]) ** 2).sum(-1))
        out[a] = np.minimum.reduceat(d, starts, axis=1).min(axis=0)
    # both triangles hold the same minima up to rounding
    out = np.minimum(out, out.T)
    np.fill_diagonal(out, 0.0)
    return out


def block_edge_types(block_dist, thresholds):
    """Block-pair edge type: 0 same block, 1 within delta_topo, 2 within delta_max, -1 none."""
    types = np.full(block_dist.shape, -1, dtype=np.int8)
    types[block_dist <= thresholds.delta_max] = SPATIAL
    types[block_dist <= thresholds.delta_topo] = TOPO
    np.fill_diagonal(types, INTRA)
    return types


def classify_edges(coords, block_of, thresholds, n_blocks=None):
    """Typed, symmetric atom-pair edges sorted by ``(i, j)``; shape ``(E, 3)``."""
    coords = np.asarray(coords, dtype=np.float64)
    block_of = np.asarray(block_of, dtype=np.int64)
    if len(block_of) == 0:
        return np.zeros((0, 3), dtype=np.int64)
    types = block_edge_types(block_distance_matrix(coords, block_of, n_blocks), thresholds)
    atom_types = types[block_of[:, None], block_of[None, :]]
    np.fill_diagonal(atom_types, -1)
    i, j = np.nonzero(atom_types >= 0)
    return np.stack([i, j, atom_types[i, j].astype(np.int64)], axis=1).astype(np.int64)


def edge_histogram(edges):
    return np.bincount(np.asarray(edges)[:, 2], minlength=len(EDGE_TYPES)) if len(edges) else np.zeros(3, dtype=np.int64)
