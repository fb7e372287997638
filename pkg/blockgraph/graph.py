import numpy as np

from blockgraph.blocks import assign_blocks_protein, assign_blocks_small
from blockgraph.edges import classify_edges
from config import Thresholds
from errors import StructuralError
from models import PROTEIN, SMALL_MOLECULE, MolGraph, RawProtein
from molio import vocab


def build_graph(raw, thresholds=None):
    """Turn a parsed molecule or protein into a MolGraph; atoms keep file order."""
    thresholds = thresholds or Thresholds()
    if isinstance(raw, RawProtein):
        atoms = [a for r in raw.residues for a in r.atoms]
        if not atoms:
            raise StructuralError(f"protein {raw.name or '<unnamed>'} has no atoms")
        block_of, block_code, block_chain = assign_blocks_protein(raw)
        atom_code = [vocab.atom_code(a.element) for a in atoms]
        pos_code = [vocab.position_code(a.name, PROTEIN) for a in atoms]
        coords = np.array([a.coords for a in atoms])
        domain = PROTEIN
    else:
        if raw.kind != SMALL_MOLECULE:
            raise StructuralError("protein structures must come with residue records (PDB input)")
        if raw.n_atoms == 0:
            raise StructuralError(f"molecule {raw.name or '<unnamed>'} has no atoms")
        block_of, block_code = assign_blocks_small(raw)
        block_chain = np.zeros(len(block_code), dtype=np.int64)
        atom_code = [vocab.atom_code(e) for e in raw.elements]
        pos_code = [vocab.POS_SML] * raw.n_atoms
        coords = raw.coords
        domain = SMALL_MOLECULE

    return MolGraph(
        atom_code=atom_code,
        block_of=block_of,
        block_code=block_code,
        pos_code=pos_code,
        coords=coords,
        edges=classify_edges(coords, block_of, thresholds, len(block_code)),
        domain=domain,
        block_chain=block_chain,
        name=raw.name,
    )


def retype_edges(graph, coords, thresholds=None):
    """The same graph at new coordinates, with edges typed for those coordinates."""
    thresholds = thresholds or Thresholds()
    return graph.with_coords(coords, classify_edges(coords, graph.block_of, thresholds, graph.n_blocks))


def point_cloud_graph(n, rng, cutoff=4.0):
    """Singleton carbon blocks uniformly inside a sphere of radius n**(1/3)."""
    direction = rng.standard_normal((n, 3))
    direction /= np.linalg.norm(direction, axis=1, keepdims=True)
    radius = n ** (1.0 / 3.0) * rng.random(n) ** (1.0 / 3.0)
    coords = direction * radius[:, None]
    block_of = np.arange(n)
    thresholds = Thresholds(delta_topo=min(1.6, cutoff / 2), delta_max=cutoff)
    carbon = vocab.atom_code("C")
    return MolGraph(
        atom_code=np.full(n, carbon),
        block_of=block_of,
        block_code=np.full(n, vocab.block_code_element("C")),
        pos_code=np.full(n, vocab.POS_SML),
        coords=coords,
        edges=classify_edges(coords, block_of, thresholds, n),
        name=f"cloud-{n}",
    )
