from pathlib import Path

from errors import ParseError
from molio.pdb import parse_pdb_subset, write_pdb
from molio.sdf import parse_sdf_subset
from molio.vocab import position_code
from molio.xyz import parse_xyz, split_frames, write_xyz

PARSERS = {
    ".xyz": parse_xyz,
    ".sdf": parse_sdf_subset,
    ".mol": parse_sdf_subset,
    ".pdb": parse_pdb_subset,
}


def read_structure(path):
    """Parse a structure file, picking the parser from its suffix."""
    path = Path(path)
    parser = PARSERS.get(path.suffix.lower())
    if parser is None:
        raise ParseError(f"unsupported file type {path.suffix!r}; use one of {', '.join(PARSERS)}",
                         source=path.name)
    try:
        text = path.read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as e:
        raise ParseError(f"cannot read file: {e}", source=path.name) from None
    structure = parser(text, source=path.name)
    if not structure.name:
        structure.name = path.stem
    return structure


__all__ = [
    "parse_pdb_subset", "parse_sdf_subset", "parse_xyz", "position_code",
    "read_structure", "split_frames", "write_pdb", "write_xyz",
]
