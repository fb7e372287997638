"""Peak attention scratch memory of the dense and streaming kernels."""
import logging
import time
from dataclasses import dataclass

import numpy as np

from autodiff import layer_norm
from blockgraph.graph import point_cloud_graph
from models import FAIL, PASS, CheckReport
from network.attention import ScratchCounter, attention_layer, tiled_attention
from network.embedding import embed_graph
from network.inputs import prepare_inputs
from network.params import ModelParams

logger = logging.getLogger(__name__)

MEMORY_SIZES = (256, 1024)
MEMORY_TILE = 64
NAIVE_BAND = (12.0, 20.0)
TILED_BAND = (3.0, 6.0)


@dataclass(frozen=True)
class MemoryRow:
    n: int
    naive_bytes: int
    tiled_bytes: int


def measure_attention_memory(sizes, model, tile=MEMORY_TILE, seed=0, naive_tiles=False):
    """Peak scratch bytes of one attention layer per kernel, on point clouds of each size."""
    if list(sizes) != sorted(sizes):
        raise ValueError("sizes must be sorted ascending")
    rng = np.random.default_rng(seed)
    p = ModelParams.initialize(model, rng).tensors()
    rows = []
    for n in sizes:
        inputs = prepare_inputs(point_cloud_graph(n, rng), model)
        h, v = embed_graph(inputs, p, model)
        h_norm = layer_norm(h, p["layers.0.ln_attn.gamma"], p["layers.0.ln_attn.beta"], model.ln_eps)
        naive, tiled = ScratchCounter(), ScratchCounter()
        attention_layer(h_norm, v, inputs, p, 0, model, naive)
        tiled_attention(h_norm, v, inputs, p, 0, model, n if naive_tiles else tile, tiled)
        rows.append(MemoryRow(n=n, naive_bytes=naive.peak, tiled_bytes=tiled.peak))
        logger.debug("N=%d naive %d B, tiled %d B", n, naive.peak, tiled.peak)
    return rows


def _outside(ratio, band):
    lo, hi = band
    return max(lo - ratio, ratio - hi, 0.0)


def check_memory(config, seed=0, sizes=MEMORY_SIZES, mutation=None):
    """Growth from the smallest to the largest size: dense ~quadratic, streaming ~linear."""
    started = time.perf_counter()
    rows = measure_attention_memory(sizes, config.model, seed=seed, naive_tiles=mutation == "naive-tiles")
    first, last = rows[0], rows[-1]
    naive_ratio = last.naive_bytes / first.naive_bytes
    tiled_ratio = last.tiled_bytes / first.tiled_bytes
    value = max(_outside(naive_ratio, NAIVE_BAND), _outside(tiled_ratio, TILED_BAND))
    monotone = all(a.naive_bytes <= b.naive_bytes and a.tiled_bytes <= b.tiled_bytes for a, b in zip(rows, rows[1:]))
    return CheckReport(
        name="memory", status=PASS if value == 0.0 and monotone else FAIL, value=value, tolerance=0.0,
        runtime_ms=1000.0 * (time.perf_counter() - started), seed=seed,
        detail=f"naive x{naive_ratio:.2f}, tiled x{tiled_ratio:.2f} from N={first.n} to N={last.n}",
    )


def memory_table(rows):
    lines = [f"{'N':>6} {'naive bytes':>14} {'tiled bytes':>14}"]
    lines += [f"{r.n:>6} {r.naive_bytes:>14} {r.tiled_bytes:>14}" for r in rows]
    return "\n".join(lines)
