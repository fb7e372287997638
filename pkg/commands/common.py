"""Helpers shared by every subcommand: config flags, output directories, manifests."""
import functools
import glob
import json
import os
import shutil
import sys
from datetime import datetime, timezone

import click

from blockgraph.graph import build_graph
from blockgraph.shards import read_shard
from config import VERSION, load_config
from errors import ConfigError
from molio import read_structure

MANIFEST = "manifest.json"


def config_options(func):
    """--config / --set / --profile / --seed, resolved into a ``config`` keyword."""
    @click.option("--config", "config_path", type=click.Path(dir_okay=False), default=None,
                  help="TOML config with [model], [train] and [graph] sections.")
    @click.option("--set", "overrides", multiple=True, metavar="SECTION.KEY=VALUE",
                  help="Override one config value; repeatable.")
    @click.option("--profile", default=None, help="Model profile: full, desk or tiny.")
    @click.option("--seed", type=int, default=None, help="Overrides train.seed and EPT_SEED.")
    @functools.wraps(func)
    def wrapper(config_path, overrides, profile, seed, **kwargs):
        config = load_config(config_path, overrides, profile=profile, seed=seed)
        return func(config=config, **kwargs)
    return wrapper


def expand_inputs(patterns):
    """Files matching any of the globs, sorted, each listed once."""
    paths = []
    for pattern in patterns:
        matches = sorted(glob.glob(pattern)) or ([pattern] if os.path.isfile(pattern) else [])
        paths.extend(p for p in matches if p not in paths)
    if not paths:
        raise ConfigError("no inputs")
    return paths


def prepare_out_dir(path, overwrite=False):
    """Create ``path``; a non-empty directory is cleared with ``overwrite`` and refused otherwise."""
    if os.path.isdir(path) and os.listdir(path):
        if not overwrite:
            raise ConfigError(f"output directory {path} is not empty; pass --overwrite to replace it")
        shutil.rmtree(path)
    os.makedirs(path, exist_ok=True)
    return path


def write_manifest(out_dir, command, config, **details):
    manifest = {
        "command": command,
        "version": VERSION,
        "seed": config.train.seed,
        "model_hash": config.model_hash(),
        "created": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        "argv": sys.argv[1:],
        "config": config.to_toml(),
        **details,
    }
    with open(os.path.join(out_dir, MANIFEST), "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)


def load_graph_file(path, thresholds):
    """Graphs from an EPTG shard, or the single graph of a structure file."""
    if str(path).endswith(".eptg"):
        return read_shard(path)
    return [build_graph(read_structure(path), thresholds)]
