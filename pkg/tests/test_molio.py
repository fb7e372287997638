import numpy as np
import pytest

from errors import ParseError
from models import PROTEIN, RawMolecule
from molio import parse_pdb_subset, parse_sdf_subset, parse_xyz, read_structure, split_frames, write_pdb, write_xyz
from molio import vocab
from tests.conftest import fixture_path


def test_xyz_fixture():
    mol = read_structure(fixture_path("water.xyz"))
    assert mol.elements == ["O", "H", "H"]
    assert mol.name == "water"
    np.testing.assert_allclose(mol.coords[1], [0.757, 0.586, 0.0])


def test_xyz_element_case_is_normalised():
    mol = parse_xyz("2\n\ncl 0 0 0\nNA 1 0 0\n")
    assert mol.elements == ["Cl", "Na"]


@pytest.mark.parametrize("text, line, message", [
    ("two\n\nH 0 0 0\n", 1, "not an integer"),
    ("3\n\nH 0 0 0\nH 1 0 0\n", 1, "declares 3 atoms"),
    ("1\n\nQq 0 0 0\n", 3, "unknown element"),
    ("2\n\nH 0 0 0\nH 1 zero 0\n", 4, "unparseable"),
    ("1\n\nH 0 0\n", 3, "symbol x y z"),
])
def test_xyz_errors_carry_line_numbers(text, line, message):
    with pytest.raises(ParseError, match=message) as info:
        parse_xyz(text, source="bad.xyz")
    assert info.value.line == line
    assert str(info.value).startswith(f"bad.xyz:line {line}")


def test_xyz_write_then_parse_keeps_six_decimals(rng):
    mol = RawMolecule(elements=["C", "O", "H"], coords=rng.uniform(-5, 5, (3, 3)), name="roundtrip")
    back = parse_xyz(write_xyz(mol))
    assert back.elements == mol.elements
    assert np.max(np.abs(back.coords - mol.coords)) <= 1e-6


def test_split_frames():
    text = "1\nfirst\nH 0 0 0\n\n1\nsecond\nH 1 0 0\n"
    frames = split_frames(text)
    assert [parse_xyz(f).name for f in frames] == ["first", "second"]


def test_sdf_fixture_reads_atoms_and_bonds():
    mol = read_structure(fixture_path("ethanol.sdf"))
    assert mol.name == "ethanol"
    assert mol.elements == ["C", "C", "O"] + ["H"] * 6
    assert mol.bonds.shape == (8, 2)
    assert mol.bonds[0].tolist() == [0, 1]
    np.testing.assert_allclose(mol.coords[2], [2.0, 1.35, 0.0])


def test_sdf_rejects_v3000():
    text = "x\n\n\n  0  0  0  0  0  0  0  0  0  0999 V3000\nM  END\n"
    with pytest.raises(ParseError, match="V3000") as info:
        parse_sdf_subset(text)
    assert info.value.line == 4


def test_sdf_bond_outside_atom_range():
    with open(fixture_path("methane.sdf")) as fh:
        lines = fh.read().splitlines()
    lines[9] = "  1  7  1  0"
    with pytest.raises(ParseError, match="bond references atom 7") as info:
        parse_sdf_subset("\n".join(lines))
    assert info.value.line == 10


def test_sdf_short_record():
    with pytest.raises(ParseError, match="shorter"):
        parse_sdf_subset("x\n\n\n  3  0  0  0  0  0  0  0  0  0999 V2000\n")


def test_pdb_first_model_and_altloc():
    prot = read_structure(fixture_path("tripeptide.pdb"))
    assert prot.kind == PROTEIN
    assert [r.name for r in prot.residues] == ["ALA", "GLY", "SER"]
    assert [len(r.atoms) for r in prot.residues] == [5, 4, 6]
    cb = prot.residues[0].atoms[4]
    assert cb.name == "CB"
    np.testing.assert_array_equal(cb.coords, [1.46, -1.5, 0.0])
    assert prot.n_atoms == 15


def test_pdb_duplicate_atom_name():
    line = "ATOM      1  CA  ALA A   1       0.000   0.000   0.000  1.00  0.00           C"
    with pytest.raises(ParseError, match="duplicate atom name") as info:
        parse_pdb_subset(line + "\n" + line.replace("   1       0.000", "   1       1.000", 1))
    assert info.value.line == 2


def test_pdb_element_falls_back_to_atom_name():
    line = "ATOM      1  N   GLY A   1       0.000   0.000   0.000"
    prot = parse_pdb_subset(line)
    assert prot.residues[0].atoms[0].element == "N"


def test_pdb_writer_is_read_back():
    prot = read_structure(fixture_path("tripeptide.pdb"))
    back = parse_pdb_subset(write_pdb(prot))
    assert [a.name for a in back.residues[2].atoms] == ["N", "CA", "C", "O", "CB", "OG"]
    np.testing.assert_allclose(back.residues[2].atoms[5].coords, [9.06, -2.9, 0.0])


def test_unsupported_suffix(tmp_path):
    path = tmp_path / "mol.cif"
    path.write_text("data_x\n")
    with pytest.raises(ParseError, match="unsupported file type"):
        read_structure(path)


def test_vocabulary_codes():
    assert vocab.atom_code("H") == 3
    assert vocab.atom_code("c") == 8
    assert vocab.element_of_code(8) == "C"
    assert vocab.element_of_code(vocab.PAD) is None
    assert vocab.element_of_code(vocab.ATOM_VOCAB_SIZE) is None
    assert vocab.block_code_residue("ALA") == vocab.AA_OFFSET
    assert vocab.block_code_residue("XYZ") == vocab.BLOCK_UNK
    assert vocab.block_code_element("C") == vocab.BLOCK_ELEMENT_OFFSET + 5
    assert vocab.position_code("CA", PROTEIN) == 4
    assert vocab.position_code("CB", PROTEIN) == 7
    assert vocab.position_code("OXT", PROTEIN) == 12
    assert vocab.position_code("C1", "small-molecule") == vocab.POS_SML
    assert vocab.ATOM_VOCAB_SIZE == 121
