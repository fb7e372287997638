import numpy as np

from models import Chain, MolGraph, PROTEIN, RawProtein


def residue_windows(chain_lengths, k):
    """Every ``(chain, start)`` of ``k`` consecutive residues."""
    return [(c, s) for c, n in enumerate(chain_lengths) for s in range(n - k + 1)]


def random_residue_segment(prot, k, rng):
    """``k`` consecutive residues of one chain, the window drawn uniformly.

    Proteins without any chain of ``k`` residues come back whole.
    """
    windows = residue_windows([len(c.residues) for c in prot.chains], k)
    if not windows:
        return prot
    c, start = windows[int(rng.integers(len(windows)))]
    chain = prot.chains[c]
    return RawProtein(chains=[Chain(chain.chain_id, chain.residues[start:start + k])], name=prot.name)


def subgraph(graph, blocks):
    """Keep the listed blocks (in order) and the edges among their atoms."""
    blocks = np.asarray(blocks, dtype=np.int64)
    remap = np.full(graph.n_blocks, -1, dtype=np.int64)
    remap[blocks] = np.arange(len(blocks))
    keep = remap[graph.block_of] >= 0
    atom_map = np.full(graph.n_atoms, -1, dtype=np.int64)
    atom_map[keep] = np.arange(int(keep.sum()))
    e = graph.edges
    sel = keep[e[:, 0]] & keep[e[:, 1]] if len(e) else np.zeros(0, dtype=bool)
    edges = np.stack([atom_map[e[sel, 0]], atom_map[e[sel, 1]], e[sel, 2]], axis=1) if sel.any() else np.zeros((0, 3))
    return MolGraph(
        atom_code=graph.atom_code[keep],
        block_of=remap[graph.block_of[keep]],
        block_code=graph.block_code[blocks],
        pos_code=graph.pos_code[keep],
        coords=graph.coords[keep],
        edges=edges,
        domain=graph.domain,
        block_chain=graph.block_chain[blocks],
        name=graph.name,
    )


def segment_graph(graph, k, rng):
    """Graph-level counterpart of ``random_residue_segment``.

    Only protein graphs are cut; edge types survive because a block pair's
    distance depends on those two blocks alone.
    """
    if graph.domain != PROTEIN:
        return graph
    chains = np.unique(graph.block_chain)
    per_chain = [np.flatnonzero(graph.block_chain == c) for c in chains]
    windows = residue_windows([len(b) for b in per_chain], k)
    if not windows:
        return graph
    c, start = windows[int(rng.integers(len(windows)))]
    return subgraph(graph, per_chain[c][start:start + k])
