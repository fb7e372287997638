"""EPTG shard files.

Little-endian. Header: magic ``EPTG``, version u16, graph count u32. Per graph:
N u32, M u32, E u32, domain u8, name length u16 + UTF-8 name, atom codes u16[N],
block ids u32[N], block codes u16[M], position codes u16[N], block chains u16[M],
coordinates f64[N*3], edges as packed (u32, u32, u8) triples.
"""
import struct

import numpy as np

from errors import ParseError
from models import KINDS, MolGraph

MAGIC = b"EPTG"
VERSION = 1
EDGE_DTYPE = np.dtype([("i", "<u4"), ("j", "<u4"), ("t", "u1")])


def _encode(graph):
    name = graph.name.encode("utf-8")
    edges = np.zeros(len(graph.edges), dtype=EDGE_DTYPE)
    edges["i"], edges["j"], edges["t"] = graph.edges[:, 0], graph.edges[:, 1], graph.edges[:, 2]
    return b"".join([
        struct.pack("<IIIBH", graph.n_atoms, graph.n_blocks, len(graph.edges),
                    KINDS.index(graph.domain), len(name)),
        name,
        graph.atom_code.astype("<u2").tobytes(),
        graph.block_of.astype("<u4").tobytes(),
        graph.block_code.astype("<u2").tobytes(),
        graph.pos_code.astype("<u2").tobytes(),
        graph.block_chain.astype("<u2").tobytes(),
        graph.coords.astype("<f8").tobytes(),
        edges.tobytes(),
    ])


def write_shard(path, graphs):
    with open(path, "wb") as fh:
        fh.write(MAGIC + struct.pack("<HI", VERSION, len(graphs)))
        for g in graphs:
            fh.write(_encode(g))


class _Reader:
    def __init__(self, data, source):
        self.data = data
        self.pos = 0
        self.source = source

    def take(self, n):
        if self.pos + n > len(self.data):
            raise ParseError(f"shard truncated at byte {self.pos}", source=self.source)
        chunk = self.data[self.pos:self.pos + n]
        self.pos += n
        return chunk

    def array(self, dtype, count):
        dtype = np.dtype(dtype)
        return np.frombuffer(self.take(dtype.itemsize * count), dtype=dtype, count=count)


def read_shard(path):
    with open(path, "rb") as fh:
        data = fh.read()
    return decode_shard(data, source=str(path))


def decode_shard(data, source=None):
    reader = _Reader(data, source)
    if reader.take(4) != MAGIC:
        raise ParseError("not an EPTG shard (bad magic)", source=source)
    version, count = struct.unpack("<HI", reader.take(6))
    if version != VERSION:
        raise ParseError(f"unsupported shard version {version}", source=source)

    graphs = []
    for _ in range(count):
        n, m, e, domain, name_len = struct.unpack("<IIIBH", reader.take(15))
        if domain >= len(KINDS):
            raise ParseError(f"unknown domain tag {domain}", source=source)
        name = reader.take(name_len).decode("utf-8")
        atom_code = reader.array("<u2", n)
        block_of = reader.array("<u4", n)
        block_code = reader.array("<u2", m)
        pos_code = reader.array("<u2", n)
        block_chain = reader.array("<u2", m)
        coords = reader.array("<f8", n * 3).reshape(n, 3)
        edges = reader.array(EDGE_DTYPE, e)
        graphs.append(MolGraph(
            atom_code=atom_code,
            block_of=block_of,
            block_code=block_code,
            pos_code=pos_code,
            coords=coords,
            edges=np.stack([edges["i"], edges["j"], edges["t"]], axis=1).astype(np.int64),
            domain=KINDS[domain],
            block_chain=block_chain,
            name=name,
        ))
    if reader.pos != len(data):
        raise ParseError(f"{len(data) - reader.pos} trailing bytes after the last graph", source=source)
    return graphs


def read_shards(paths):
    return [g for p in paths for g in read_shard(p)]
