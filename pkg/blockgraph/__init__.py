from blockgraph.batching import batch, collate, plan_batches, unbatch_all
from blockgraph.blocks import assign_blocks_protein, assign_blocks_small
from blockgraph.edges import block_distance, block_distance_matrix, classify_edges, edge_histogram
from blockgraph.graph import build_graph, point_cloud_graph, retype_edges
from blockgraph.segment import random_residue_segment, segment_graph, subgraph
from blockgraph.shards import read_shard, read_shards, write_shard

__all__ = [
    "assign_blocks_protein", "assign_blocks_small", "batch", "block_distance",
    "block_distance_matrix", "build_graph", "classify_edges", "collate", "edge_histogram",
    "plan_batches", "point_cloud_graph", "random_residue_segment", "read_shard",
    "read_shards", "retype_edges", "segment_graph", "subgraph", "unbatch_all", "write_shard",
]
