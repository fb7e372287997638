"""Index spaces for atom types, block types and atom positions.

Atom:     0 <pad>, 1 <mask>, 2 <global>, 3..120 elements H..Og
Block:    0 <pad>, 1 <mask>, 2 <unk>, 3 <global>, 4..23 amino acids, 24..141 elements
Position: 0 <pad>, 1 <mask>, 2 <global>, 3..12 protein positions, 13 <sml>
"""
from models import SMALL_MOLECULE

ELEMENTS = (
    "H", "He",
    "Li", "Be", "B", "C", "N", "O", "F", "Ne",
    "Na", "Mg", "Al", "Si", "P", "S", "Cl", "Ar",
    "K", "Ca", "Sc", "Ti", "V", "Cr", "Mn", "Fe", "Co", "Ni", "Cu", "Zn",
    "Ga", "Ge", "As", "Se", "Br", "Kr",
    "Rb", "Sr", "Y", "Zr", "Nb", "Mo", "Tc", "Ru", "Rh", "Pd", "Ag", "Cd",
    "In", "Sn", "Sb", "Te", "I", "Xe",
    "Cs", "Ba", "La", "Ce", "Pr", "Nd", "Pm", "Sm", "Eu", "Gd", "Tb", "Dy",
    "Ho", "Er", "Tm", "Yb", "Lu", "Hf", "Ta", "W", "Re", "Os", "Ir", "Pt",
    "Au", "Hg", "Tl", "Pb", "Bi", "Po", "At", "Rn",
    "Fr", "Ra", "Ac", "Th", "Pa", "U", "Np", "Pu", "Am", "Cm", "Bk", "Cf",
    "Es", "Fm", "Md", "No", "Lr", "Rf", "Db", "Sg", "Bh", "Hs", "Mt", "Ds",
    "Rg", "Cn", "Nh", "Fl", "Mc", "Lv", "Ts", "Og",
)

AMINO_ACIDS = (
    "ALA", "ARG", "ASN", "ASP", "CYS", "GLN", "GLU", "GLY", "HIS", "ILE",
    "LEU", "LYS", "MET", "PHE", "PRO", "SER", "THR", "TRP", "TYR", "VAL",
)

PAD, MASK = 0, 1
ATOM_GLOBAL = 2
BLOCK_UNK, BLOCK_GLOBAL = 2, 3
POS_GLOBAL = 2

ATOM_OFFSET = 3
AA_OFFSET = 4
BLOCK_ELEMENT_OFFSET = AA_OFFSET + len(AMINO_ACIDS)
POS_SML = 13

ATOM_VOCAB_SIZE = ATOM_OFFSET + len(ELEMENTS)
BLOCK_VOCAB_SIZE = BLOCK_ELEMENT_OFFSET + len(ELEMENTS)
POS_VOCAB_SIZE = POS_SML + 1

_ELEMENT_INDEX = {e.upper(): i for i, e in enumerate(ELEMENTS)}
_AA_INDEX = {name: i for i, name in enumerate(AMINO_ACIDS)}

BACKBONE_CODES = {"N": 3, "CA": 4, "C": 5, "O": 6}
# remoteness letters of side-chain atoms, beta through eta
REMOTENESS_CODES = {"B": 7, "G": 8, "D": 9, "E": 10, "Z": 11, "H": 12}
LAST_POSITION = 12


def normalize_element(symbol):
    """Canonical capitalisation, or None when the symbol is not an element."""
    key = symbol.strip().upper()
    if key not in _ELEMENT_INDEX:
        return None
    return ELEMENTS[_ELEMENT_INDEX[key]]


def is_element(symbol):
    return normalize_element(symbol) is not None


def atomic_number(symbol):
    return _ELEMENT_INDEX[symbol.strip().upper()] + 1


def atom_code(symbol):
    return ATOM_OFFSET + _ELEMENT_INDEX[symbol.strip().upper()]


def element_of_code(code):
    """Inverse of ``atom_code``; special codes give None."""
    idx = int(code) - ATOM_OFFSET
    return ELEMENTS[idx] if 0 <= idx < len(ELEMENTS) else None


def block_code_residue(name):
    idx = _AA_INDEX.get(name.strip().upper())
    return BLOCK_UNK if idx is None else AA_OFFSET + idx


def block_code_element(symbol):
    idx = _ELEMENT_INDEX.get(symbol.strip().upper())
    return BLOCK_UNK if idx is None else BLOCK_ELEMENT_OFFSET + idx


def position_code(atom_name, kind):
    if kind == SMALL_MOLECULE:
        return POS_SML
    name = atom_name.strip().upper()
    if name in BACKBONE_CODES:
        return BACKBONE_CODES[name]
    if len(name) >= 2 and name[1] in REMOTENESS_CODES:
        return REMOTENESS_CODES[name[1]]
    return LAST_POSITION


def is_hydrogen(symbol):
    return symbol.strip().upper() in ("H", "D")
