import numpy as np

from errors import ParseError
from models import SMALL_MOLECULE, RawMolecule
from molio.vocab import normalize_element


def _int_field(line, lo, hi, what, lineno, source):
    try:
        return int(line[lo:hi])
    except ValueError:
        raise ParseError(f"malformed {what} {line[lo:hi]!r}", line=lineno, source=source) from None


def parse_sdf_subset(text, source=None):
    """Read the first record's counts line, atom block and bond block (V2000)."""
    lines = text.splitlines()
    if len(lines) < 4:
        raise ParseError("missing counts line", line=len(lines) + 1, source=source)
    counts = lines[3]
    if "V3000" in counts:
        raise ParseError("V3000 connection tables are not supported; convert to V2000", line=4, source=source)
    n_atoms = _int_field(counts, 0, 3, "atom count", 4, source)
    n_bonds = _int_field(counts, 3, 6, "bond count", 4, source)
    if len(lines) < 4 + n_atoms + n_bonds:
        raise ParseError(f"counts line declares {n_atoms} atoms and {n_bonds} bonds "
                         f"but the record is shorter", line=4, source=source)

    elements, coords = [], []
    for k in range(n_atoms):
        lineno = 5 + k
        row = lines[4 + k]
        try:
            xyz = [float(row[0:10]), float(row[10:20]), float(row[20:30])]
        except ValueError:
            raise ParseError(f"unparseable coordinate in {row.strip()!r}", line=lineno, source=source) from None
        symbol = normalize_element(row[31:34])
        if symbol is None:
            raise ParseError(f"unknown element symbol {row[31:34].strip()!r}", line=lineno, source=source)
        elements.append(symbol)
        coords.append(xyz)

    bonds = []
    for k in range(n_bonds):
        lineno = 5 + n_atoms + k
        row = lines[4 + n_atoms + k]
        i = _int_field(row, 0, 3, "bond atom index", lineno, source)
        j = _int_field(row, 3, 6, "bond atom index", lineno, source)
        for idx in (i, j):
            if not 1 <= idx <= n_atoms:
                raise ParseError(f"bond references atom {idx} of {n_atoms}", line=lineno, source=source)
        if i == j:
            raise ParseError(f"bond joins atom {i} to itself", line=lineno, source=source)
        bonds.append((i - 1, j - 1))

    return RawMolecule(elements=elements, coords=np.array(coords).reshape(-1, 3),
                       bonds=np.array(bonds, dtype=np.int64).reshape(-1, 2),
                       kind=SMALL_MOLECULE, name=lines[0].strip())
