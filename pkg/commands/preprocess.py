import json
import logging
import os
from collections import Counter
from concurrent.futures import ThreadPoolExecutor

import click
import numpy as np
from tqdm import tqdm

from blockgraph.edges import edge_histogram
from blockgraph.graph import build_graph
from blockgraph.shards import write_shard
from commands.common import config_options, expand_inputs, prepare_out_dir, write_manifest
from errors import EPTError
from molio import read_structure

logger = logging.getLogger(__name__)


def _build(path, thresholds):
    try:
        return path, build_graph(read_structure(path), thresholds), None
    except EPTError as e:
        return path, None, str(e)


def graph_stats(graphs):
    """Counts per domain plus block-size and edge-type histograms."""
    sizes = Counter(int(s) for g in graphs for s in g.block_sizes)
    edges = sum((edge_histogram(g.edges) for g in graphs), np.zeros(3, dtype=np.int64))
    return {
        "graphs": len(graphs),
        "domains": dict(Counter(g.domain for g in graphs)),
        "block_sizes": {str(k): sizes[k] for k in sorted(sizes)},
        "edge_types": {str(t): int(c) for t, c in enumerate(edges)},
    }


def preprocess_files(paths, thresholds, out_dir, shard_size=1000, workers=4, progress=False):
    """Parse and build every file, write shards; returns ``(stats, failures)``."""
    graphs, failures = [], []
    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        results = pool.map(lambda p: _build(p, thresholds), paths)
        for path, graph, error in tqdm(results, total=len(paths), desc="preprocess", disable=not progress):
            if error is None:
                graphs.append(graph)
            else:
                logger.warning("skipping %s: %s", path, error)
                failures.append({"file": path, "error": error})
    if not graphs:
        raise EPTError(f"all {len(paths)} input files failed; first error: {failures[0]['error']}")

    shards = []
    for k in range(0, len(graphs), shard_size):
        name = f"shard_{k // shard_size:04d}.eptg"
        write_shard(os.path.join(out_dir, name), graphs[k:k + shard_size])
        shards.append(name)
    stats = graph_stats(graphs)
    stats["shards"] = shards
    stats["failures"] = failures
    with open(os.path.join(out_dir, "stats.json"), "w", encoding="utf-8") as fh:
        json.dump(stats, fh, indent=2)
    return stats, failures


@click.command("preprocess")
@click.argument("inputs", nargs=-1)
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
@click.option("--shard-size", default=1000, show_default=True, type=click.IntRange(min=1))
@click.option("--workers", default=4, show_default=True, type=click.IntRange(min=1))
@click.option("--overwrite", is_flag=True, help="Replace a non-empty output directory.")
@config_options
def preprocess(config, inputs, out_dir, shard_size, workers, overwrite):
    """Parse XYZ / SDF / PDB files into EPTG graph shards."""
    paths = expand_inputs(inputs)
    prepare_out_dir(out_dir, overwrite)
    stats, failures = preprocess_files(paths, config.graph, out_dir, shard_size, workers, progress=True)
    write_manifest(out_dir, "preprocess", config, inputs=paths, shards=stats["shards"])
    click.echo(f"{stats['graphs']} graphs from {len(paths)} files ({len(failures)} failed)")
    for domain, count in sorted(stats["domains"].items()):
        click.echo(f"  {domain}: {count}")
    click.echo("block sizes: " + ", ".join(f"{k}:{v}" for k, v in stats["block_sizes"].items()))
    click.echo("edge types:  " + ", ".join(f"{k}:{v}" for k, v in stats["edge_types"].items()))
