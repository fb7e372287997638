import numpy as np

from errors import ParseError
from models import SMALL_MOLECULE, RawMolecule
from molio.vocab import normalize_element


def parse_xyz(text, source=None):
    """Parse one XYZ frame: count line, comment line, ``symbol x y z`` rows."""
    lines = text.splitlines()
    if not lines:
        raise ParseError("empty XYZ text", line=1, source=source)
    try:
        count = int(lines[0].strip())
    except ValueError:
        raise ParseError(f"atom count {lines[0].strip()!r} is not an integer", line=1, source=source) from None
    if count < 0:
        raise ParseError("atom count is negative", line=1, source=source)
    rows = lines[2:2 + count]
    if len(lines) < 2 or len(rows) < count:
        raise ParseError(f"count line declares {count} atoms but the file has {len(rows)}",
                         line=1, source=source)

    elements, coords = [], []
    for offset, row in enumerate(rows):
        lineno = offset + 3
        parts = row.split()
        if len(parts) < 4:
            raise ParseError(f"expected 'symbol x y z', got {row.strip()!r}", line=lineno, source=source)
        symbol = normalize_element(parts[0])
        if symbol is None:
            raise ParseError(f"unknown element symbol {parts[0]!r}", line=lineno, source=source)
        try:
            xyz = [float(v) for v in parts[1:4]]
        except ValueError:
            raise ParseError(f"unparseable coordinate in {row.strip()!r}", line=lineno, source=source) from None
        if not np.all(np.isfinite(xyz)):
            raise ParseError("non-finite coordinate", line=lineno, source=source)
        elements.append(symbol)
        coords.append(xyz)

    return RawMolecule(elements=elements, coords=np.array(coords).reshape(-1, 3),
                       kind=SMALL_MOLECULE, name=lines[1].strip() if len(lines) > 1 else "")


def split_frames(text):
    """Split concatenated XYZ frames into per-frame texts."""
    lines = text.splitlines()
    frames, pos = [], 0
    while pos < len(lines):
        if not lines[pos].strip():
            pos += 1
            continue
        try:
            count = int(lines[pos].strip())
        except ValueError:
            raise ParseError(f"frame count {lines[pos].strip()!r} is not an integer", line=pos + 1) from None
        frames.append("\n".join(lines[pos:pos + count + 2]) + "\n")
        pos += count + 2
    return frames


def write_xyz(mol, comment=None):
    if mol.kind != SMALL_MOLECULE:
        raise ValueError("write_xyz only writes small molecules")
    comment = mol.name if comment is None else comment
    rows = [f"{e} {x:.6f} {y:.6f} {z:.6f}" for e, (x, y, z) in zip(mol.elements, mol.coords)]
    return "\n".join([str(mol.n_atoms), comment] + rows) + "\n"
