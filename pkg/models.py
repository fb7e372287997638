"""Domain records shared across packages.

Coordinates are stored row-major as ``(N, 3)`` float64 arrays.
"""
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from errors import StructuralError

SMALL_MOLECULE = "small-molecule"
PROTEIN = "protein"
KINDS = (SMALL_MOLECULE, PROTEIN)


def _coords(value, what="coordinates"):
    arr = np.asarray(value, dtype=np.float64).reshape(-1, 3)
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{what} must be finite")
    return arr


# ---------------------------
# Raw structures
# ---------------------------

@dataclass
class RawMolecule:
    elements: list
    coords: np.ndarray
    bonds: Optional[np.ndarray] = None
    kind: str = SMALL_MOLECULE
    name: str = ""

    def __post_init__(self):
        self.elements = [str(e) for e in self.elements]
        self.coords = _coords(self.coords)
        if len(self.elements) != len(self.coords):
            raise ValueError(f"{len(self.elements)} elements but {len(self.coords)} coordinate rows")
        if self.kind not in KINDS:
            raise ValueError(f"invalid kind {self.kind!r}. Use one of: {', '.join(KINDS)}")
        if self.bonds is not None:
            bonds = np.asarray(self.bonds, dtype=np.int64).reshape(-1, 2)
            n = len(self.elements)
            if bonds.size and (bonds.min() < 0 or bonds.max() >= n):
                raise ValueError(f"bond endpoint outside 0..{n - 1}")
            if np.any(bonds[:, 0] == bonds[:, 1]):
                raise ValueError("bond joins an atom to itself")
            self.bonds = bonds

    @property
    def n_atoms(self):
        return len(self.elements)


@dataclass
class ProteinAtom:
    name: str
    element: str
    coords: np.ndarray

    def __post_init__(self):
        self.coords = _coords(self.coords, f"atom {self.name}").reshape(3)


@dataclass
class Residue:
    name: str
    seq: int
    icode: str = ""
    atoms: list = field(default_factory=list)

    def __post_init__(self):
        names = [a.name for a in self.atoms]
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate atom names in residue {self.name}{self.seq}{self.icode}")


@dataclass
class Chain:
    chain_id: str
    residues: list = field(default_factory=list)


@dataclass
class RawProtein:
    chains: list = field(default_factory=list)
    name: str = ""
    kind: str = PROTEIN

    @property
    def residues(self):
        return [r for c in self.chains for r in c.residues]

    @property
    def n_atoms(self):
        return sum(len(r.atoms) for r in self.residues)


# ---------------------------
# Graphs
# ---------------------------

@dataclass
class MolGraph:
    """Block-level molecular graph: per-atom codes, block partition, typed edges.

    ``edges`` holds ``(i, j, type)`` rows, sorted, both directions present.
    """
    atom_code: np.ndarray
    block_of: np.ndarray
    block_code: np.ndarray
    pos_code: np.ndarray
    coords: np.ndarray
    edges: np.ndarray
    domain: str = SMALL_MOLECULE
    block_chain: Optional[np.ndarray] = None
    name: str = ""

    def __post_init__(self):
        self.atom_code = np.asarray(self.atom_code, dtype=np.int64).reshape(-1)
        self.block_of = np.asarray(self.block_of, dtype=np.int64).reshape(-1)
        self.block_code = np.asarray(self.block_code, dtype=np.int64).reshape(-1)
        self.pos_code = np.asarray(self.pos_code, dtype=np.int64).reshape(-1)
        self.coords = _coords(self.coords)
        self.edges = np.asarray(self.edges, dtype=np.int64).reshape(-1, 3)
        if self.block_chain is None:
            self.block_chain = np.zeros(len(self.block_code), dtype=np.int64)
        self.block_chain = np.asarray(self.block_chain, dtype=np.int64).reshape(-1)
        self.validate()

    def validate(self):
        n, m = len(self.atom_code), len(self.block_code)
        if n == 0:
            raise StructuralError("a graph needs at least one atom")
        for name in ("block_of", "pos_code", "coords"):
            if len(getattr(self, name)) != n:
                raise StructuralError(f"{name} has {len(getattr(self, name))} rows, expected {n}")
        if len(self.block_chain) != m:
            raise StructuralError(f"block_chain has {len(self.block_chain)} entries, expected {m}")
        if not np.array_equal(np.unique(self.block_of), np.arange(m)):
            raise StructuralError(f"block_of must cover 0..{m - 1} exactly")
        if len(self.edges):
            i, j = self.edges[:, 0], self.edges[:, 1]
            if i.min() < 0 or max(i.max(), j.max()) >= n or j.min() < 0:
                raise StructuralError("edge endpoint outside the graph")
            if np.any(i == j):
                raise StructuralError("self-edges are not allowed")
            forward = set(map(tuple, self.edges.tolist()))
            if any((b, a, t) not in forward for a, b, t in forward):
                raise StructuralError("edge list is not symmetric")

    @property
    def n_atoms(self):
        return len(self.atom_code)

    @property
    def n_blocks(self):
        return len(self.block_code)

    @property
    def block_sizes(self):
        return np.bincount(self.block_of, minlength=self.n_blocks)

    def with_coords(self, coords, edges=None):
        return replace(self, coords=np.array(coords, dtype=np.float64),
                       edges=self.edges if edges is None else edges)

    def same_as(self, other):
        return (self.domain == other.domain and self.name == other.name
                and all(np.array_equal(getattr(self, k), getattr(other, k))
                        for k in ("atom_code", "block_of", "block_code", "pos_code",
                                  "coords", "edges", "block_chain")))


@dataclass
class GraphBatch:
    """Graphs padded to a common atom count.

    Padded slots carry the pad code 0, zero coordinates and ``mask == False``.
    ``block_index`` numbers blocks across the whole batch; padded slots hold -1.
    Edge arrays are batch-global: ``edge_batch`` selects the graph and
    ``edge_src``/``edge_dst`` index atoms within it.
    """
    atom_code: np.ndarray
    pos_code: np.ndarray
    atom_block_code: np.ndarray
    block_index: np.ndarray
    coords: np.ndarray
    mask: np.ndarray
    edge_batch: np.ndarray
    edge_src: np.ndarray
    edge_dst: np.ndarray
    edge_type: np.ndarray
    block_code: np.ndarray
    block_chain: np.ndarray
    block_offsets: np.ndarray
    sizes: np.ndarray
    domains: list
    names: list

    @property
    def batch_size(self):
        return self.atom_code.shape[0]

    @property
    def n_max(self):
        return self.atom_code.shape[1]

    @property
    def n_blocks(self):
        return len(self.block_code)

    @property
    def n_real(self):
        return int(self.sizes.sum())

    def unbatch(self):
        graphs = []
        for b in range(self.batch_size):
            n = int(self.sizes[b])
            lo, hi = int(self.block_offsets[b]), int(self.block_offsets[b + 1])
            sel = self.edge_batch == b
            edges = np.stack([self.edge_src[sel], self.edge_dst[sel], self.edge_type[sel]], axis=1)
            graphs.append(MolGraph(
                atom_code=self.atom_code[b, :n],
                block_of=self.block_index[b, :n] - lo,
                block_code=self.block_code[lo:hi],
                pos_code=self.pos_code[b, :n],
                coords=self.coords[b, :n],
                edges=edges,
                domain=self.domains[b],
                block_chain=self.block_chain[lo:hi],
                name=self.names[b],
            ))
        return graphs


# ---------------------------
# Noise and rigid-body records
# ---------------------------

@dataclass(frozen=True)
class NoiseSample:
    """Perturbed coordinates with the noise that produced them.

    ``clean`` is the mean-centered clean structure; ``block_centers`` and
    ``relative`` are its block decomposition.
    """
    mode: str
    perturbed: np.ndarray
    clean: np.ndarray
    block_of: np.ndarray
    sigma_t: float
    sigma_r: float = 0.0
    eps_atom: Optional[np.ndarray] = None
    eps_block: Optional[np.ndarray] = None
    omega: Optional[np.ndarray] = None
    block_centers: Optional[np.ndarray] = None
    relative: Optional[np.ndarray] = None
    score: Optional[np.ndarray] = None

    @property
    def n_blocks(self):
        return int(self.block_of.max()) + 1 if len(self.block_of) else 0

    def reconstruct(self):
        """Recompute the perturbed coordinates from the stored noise."""
        from denoise.perturb import apply_noise
        return apply_noise(self)


@dataclass(frozen=True)
class BlockRigidState:
    torque: np.ndarray
    inertia: np.ndarray
    angular_acceleration: np.ndarray
    relative: np.ndarray


# ---------------------------
# Verification
# ---------------------------

PASS = "pass"
FAIL = "fail"


@dataclass
class CheckReport:
    name: str
    status: str
    value: float
    tolerance: float
    runtime_ms: float
    seed: int
    detail: str = ""

    @property
    def passed(self):
        return self.status == PASS

    def to_row(self):
        return {
            "name": self.name,
            "status": self.status,
            "value": f"{self.value:.6e}",
            "tolerance": f"{self.tolerance:.6e}",
            "seed": self.seed,
            "ms": f"{self.runtime_ms:.1f}",
        }
