import numpy as np
import pytest

from blockgraph import (
    batch,
    block_distance_matrix,
    build_graph,
    classify_edges,
    collate,
    edge_histogram,
    plan_batches,
    random_residue_segment,
    read_shard,
    retype_edges,
    segment_graph,
    unbatch_all,
    write_shard,
)
from blockgraph.edges import INTRA, SPATIAL, TOPO
from blockgraph.shards import decode_shard
from config import Thresholds
from errors import CapacityError, ConfigError, ParseError, StructuralError
from models import PROTEIN, RawMolecule
from molio import read_structure, vocab
from tests.conftest import fixture_path


def test_small_molecule_blocks_follow_bonds(ethanol):
    assert ethanol.block_of.tolist() == [0, 1, 2, 0, 0, 0, 1, 1, 2]
    assert ethanol.block_sizes.tolist() == [4, 3, 2]
    assert ethanol.block_code.tolist() == [vocab.block_code_element(e) for e in ("C", "C", "O")]
    assert set(ethanol.pos_code.tolist()) == {vocab.POS_SML}


def test_small_molecule_edge_types(ethanol):
    # C-C and C-O bonds are topological; the CH3 and OH blocks only see each other spatially
    assert len(ethanol.edges) == 9 * 8
    assert edge_histogram(ethanol.edges).tolist() == [20, 36, 16]
    types = {(int(ethanol.block_of[i]), int(ethanol.block_of[j])): int(t) for i, j, t in ethanol.edges}
    assert types[(0, 1)] == TOPO
    assert types[(1, 2)] == TOPO
    assert types[(0, 2)] == SPATIAL
    assert types[(1, 1)] == INTRA


def test_edges_are_symmetric_and_sorted(ethanol):
    pairs = [tuple(e) for e in ethanol.edges.tolist()]
    assert pairs == sorted(pairs)
    assert {(j, i, t) for i, j, t in pairs} == set(pairs)


def test_bondless_hydrogens_join_nearest_heavy_atom(water, methane):
    assert water.n_blocks == 1
    assert methane.block_of.tolist() == [0] * 5
    assert edge_histogram(water.edges).tolist() == [6, 0, 0]


def test_hydrogen_only_molecule_is_rejected():
    with pytest.raises(StructuralError, match="hydrogen"):
        build_graph(read_structure(fixture_path("hydrogen.xyz")))


def test_stray_hydrogen_is_rejected():
    mol = RawMolecule(elements=["C", "H"], coords=[[0.0, 0.0, 0.0], [2.0, 0.0, 0.0]])
    with pytest.raises(StructuralError, match="hydrogen atom 1"):
        build_graph(mol)


def test_protein_blocks_are_residues(tripeptide):
    assert tripeptide.domain == PROTEIN
    assert tripeptide.block_sizes.tolist() == [5, 4, 6]
    assert tripeptide.block_code.tolist() == [vocab.block_code_residue(r) for r in ("ALA", "GLY", "SER")]
    assert tripeptide.pos_code.tolist() == [3, 4, 5, 6, 7, 3, 4, 5, 6, 3, 4, 5, 6, 7, 8]
    assert edge_histogram(tripeptide.edges).tolist() == [62, 40 + 48, 60]


def test_threshold_boundaries_are_inclusive():
    thresholds = Thresholds(delta_topo=1.5, delta_max=4.0)
    for distance, expected in ((1.5, TOPO), (4.0, SPATIAL)):
        edges = classify_edges(np.array([[0.0, 0, 0], [distance, 0, 0]]), np.array([0, 1]), thresholds)
        assert edges[:, 2].tolist() == [expected, expected]
    far = classify_edges(np.array([[0.0, 0, 0], [4.5, 0, 0]]), np.array([0, 1]), thresholds)
    assert far.shape == (0, 3)


def test_invalid_thresholds():
    with pytest.raises(ConfigError):
        Thresholds(delta_topo=2.0, delta_max=1.0)


def test_block_distance_matrix(ethanol):
    d = block_distance_matrix(ethanol.coords, ethanol.block_of)
    np.testing.assert_array_equal(d, d.T)
    np.testing.assert_array_equal(np.diag(d), 0.0)
    assert d[0, 1] == pytest.approx(1.52)


def test_retype_edges_after_expansion(ethanol):
    spread = retype_edges(ethanol, ethanol.coords * 10.0)
    assert edge_histogram(spread.edges).tolist() == [20, 0, 0]
    assert ethanol.edges.shape == (72, 3)


def test_next_fit_batching():
    assert plan_batches([3, 4, 5], 7) == [[0, 1], [2]]
    assert plan_batches([2, 2, 2], 100) == [[0, 1, 2]]
    with pytest.raises(CapacityError, match="graph 1 has 8 atoms"):
        plan_batches([3, 8], 7)


def test_collate_and_unbatch(toy_graphs):
    padded = collate(toy_graphs)
    assert padded.atom_code.shape == (4, 15)
    assert padded.mask.sum(axis=1).tolist() == [9, 3, 5, 15]
    assert padded.block_offsets.tolist() == [0, 3, 4, 5, 8]
    assert np.all(padded.atom_code[~padded.mask] == vocab.PAD)
    assert np.all(padded.coords[~padded.mask] == 0.0)
    back = padded.unbatch()
    assert all(a.same_as(b) for a, b in zip(toy_graphs, back))


def test_batch_respects_vertex_cap(toy_graphs):
    batches = batch(toy_graphs, max_vertices=17)
    assert [b.sizes.tolist() for b in batches] == [[9, 3, 5], [15]]
    assert all(a.same_as(b) for a, b in zip(toy_graphs, unbatch_all(batches)))


def test_shard_round_trip(tmp_path, toy_graphs):
    path = tmp_path / "toy.eptg"
    write_shard(path, toy_graphs)
    back = read_shard(path)
    assert len(back) == 4
    assert all(a.same_as(b) for a, b in zip(toy_graphs, back))
    assert back[3].domain == PROTEIN


def test_shard_corruption(tmp_path, water):
    path = tmp_path / "one.eptg"
    write_shard(path, [water])
    data = path.read_bytes()
    with pytest.raises(ParseError, match="bad magic"):
        decode_shard(b"XXXX" + data[4:])
    with pytest.raises(ParseError, match="truncated"):
        decode_shard(data[:-3])
    with pytest.raises(ParseError, match="trailing"):
        decode_shard(data + b"\0")


def test_segment_keeps_consecutive_residues(tripeptide, rng):
    cut = segment_graph(tripeptide, 2, rng)
    assert cut.n_blocks == 2
    assert cut.n_atoms in (5 + 4, 4 + 6)
    assert set(edge_histogram(cut.edges).tolist()[2:]) == {0}
    assert segment_graph(tripeptide, 4, rng) is tripeptide


def test_segment_leaves_small_molecules_alone(ethanol, rng):
    assert segment_graph(ethanol, 1, rng) is ethanol


def test_raw_segment_picks_one_window(rng):
    prot = read_structure(fixture_path("tripeptide.pdb"))
    seg = random_residue_segment(prot, 3, rng)
    assert [r.name for r in seg.residues] == ["ALA", "GLY", "SER"]
    assert random_residue_segment(prot, 5, rng) is prot
