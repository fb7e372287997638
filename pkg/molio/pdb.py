"""Fixed-column ATOM records of the first model.

Columns (0-based slices): name 12:16, altLoc 16, resName 17:20, chainID 21,
resSeq 22:26, iCode 26, x 30:38, y 38:46, z 46:54, element 76:78.
"""
import numpy as np

from errors import ParseError
from models import Chain, ProteinAtom, RawProtein, Residue
from molio.vocab import normalize_element


def _element(line, atom_name):
    symbol = normalize_element(line[76:78]) if len(line) >= 78 and line[76:78].strip() else None
    if symbol:
        return symbol
    for ch in atom_name:
        if ch.isalpha():
            return normalize_element(ch)
    return None


def parse_pdb_subset(text, source=None):
    chains = {}
    order = []
    current = {}

    for lineno, line in enumerate(text.splitlines(), start=1):
        if line.startswith("ENDMDL"):
            break
        if not line.startswith("ATOM  "):
            continue
        alt = line[16] if len(line) > 16 else " "
        if alt not in (" ", "A"):
            continue
        if len(line) < 54:
            raise ParseError(f"ATOM record has {len(line)} columns, need at least 54", line=lineno, source=source)
        name = line[12:16].strip()
        res_name = line[17:20].strip()
        chain_id = line[21]
        try:
            res_seq = int(line[22:26])
        except ValueError:
            raise ParseError(f"residue number {line[22:26]!r} is not an integer", line=lineno, source=source) from None
        icode = line[26].strip()
        try:
            xyz = np.array([float(line[30:38]), float(line[38:46]), float(line[46:54])])
        except ValueError:
            raise ParseError("coordinate columns 31-54 are not numbers", line=lineno, source=source) from None
        if not name or not res_name:
            raise ParseError("blank atom or residue name", line=lineno, source=source)
        element = _element(line, name)
        if element is None:
            raise ParseError(f"cannot identify the element of atom {name!r}", line=lineno, source=source)

        if chain_id not in chains:
            chains[chain_id] = Chain(chain_id=chain_id)
            order.append(chain_id)
        key = (res_seq, icode)
        residue = current.get(chain_id)
        if residue is None or (residue.seq, residue.icode) != key:
            residue = Residue(name=res_name, seq=res_seq, icode=icode)
            chains[chain_id].residues.append(residue)
            current[chain_id] = residue
        if any(a.name == name for a in residue.atoms):
            raise ParseError(f"duplicate atom name {name!r} in residue {res_name}{res_seq}{icode}",
                             line=lineno, source=source)
        residue.atoms.append(ProteinAtom(name=name, element=element, coords=xyz))

    return RawProtein(chains=[chains[c] for c in order], name=str(source or ""))


def write_pdb(protein):
    """Render ATOM records that ``parse_pdb_subset`` reads back."""
    lines, serial = [], 1
    for chain in protein.chains:
        for residue in chain.residues:
            for atom in residue.atoms:
                padded = f" {atom.name:<3s}" if len(atom.name) < 4 else atom.name
                x, y, z = atom.coords
                lines.append(
                    f"ATOM  {serial:5d} {padded:4s} {residue.name:>3s} {chain.chain_id:1s}"
                    f"{residue.seq:4d}{residue.icode or ' ':1s}   {x:8.3f}{y:8.3f}{z:8.3f}"
                    f"{1.0:6.2f}{0.0:6.2f}          {atom.element:>2s}"
                )
                serial += 1
    lines.append("END")
    return "\n".join(lines) + "\n"
