import numpy as np

from errors import StructuralError
from molio import vocab

# bondless inputs: a hydrogen joins the nearest heavy atom within this range
HYDROGEN_ATTACH_RADIUS = 1.3


def assign_blocks_small(mol):
    """One block per heavy atom; every hydrogen joins a heavy atom.

    Heavy atoms are numbered in file order. Hydrogens follow the bond table
    when one is present, otherwise the nearest heavy atom within 1.3 A.
    """
    heavy = np.array([not vocab.is_hydrogen(e) for e in mol.elements], dtype=bool)
    if not heavy.any():
        raise StructuralError(f"atom 0 is a hydrogen with no heavy atom to join ({mol.n_atoms} atoms, none heavy)")

    block_of = np.full(mol.n_atoms, -1, dtype=np.int64)
    heavy_idx = np.flatnonzero(heavy)
    block_of[heavy_idx] = np.arange(len(heavy_idx))
    block_code = np.array([vocab.block_code_element(mol.elements[i]) for i in heavy_idx], dtype=np.int64)

    for i in np.flatnonzero(~heavy):
        if mol.bonds is not None:
            partners = [int(b if a == i else a) for a, b in mol.bonds if i in (a, b)]
            partners = [p for p in partners if heavy[p]]
            if not partners:
                raise StructuralError(f"hydrogen atom {i} is not bonded to any heavy atom")
            block_of[i] = block_of[partners[0]]
        else:
            d = np.linalg.norm(mol.coords[heavy_idx] - mol.coords[i], axis=1)
            nearest = int(np.argmin(d))
            if d[nearest] > HYDROGEN_ATTACH_RADIUS:
                raise StructuralError(
                    f"hydrogen atom {i} has no heavy atom within {HYDROGEN_ATTACH_RADIUS} A "
                    f"(nearest is {d[nearest]:.3f} A away)"
                )
            block_of[i] = block_of[heavy_idx[nearest]]
    return block_of, block_code


def assign_blocks_protein(prot):
    """One block per residue; returns ``(block_of, block_code, block_chain)``."""
    block_of, block_code, block_chain = [], [], []
    m = 0
    for c, chain in enumerate(prot.chains):
        for residue in chain.residues:
            if not residue.atoms:
                continue
            block_of.extend([m] * len(residue.atoms))
            block_code.append(vocab.block_code_residue(residue.name))
            block_chain.append(c)
            m += 1
    return (np.array(block_of, dtype=np.int64), np.array(block_code, dtype=np.int64),
            np.array(block_chain, dtype=np.int64))
