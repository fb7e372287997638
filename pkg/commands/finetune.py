import csv
import os

import click
import numpy as np

from blockgraph.shards import read_shards
from commands.common import config_options, expand_inputs, prepare_out_dir, write_manifest
from errors import ColumnError
from train.checkpointing import load_training_state, save_training_state
from train.finetune import atom_count_labels, finetune as run_finetune, predict_labels
from train.metrics import MetricsWriter


def read_labels(path, graphs):
    """Labels from a ``name,label`` CSV, matched to graphs by name."""
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        for column in ("name", "label"):
            if column not in (reader.fieldnames or []):
                raise ColumnError(f"{path}: missing column {column!r}")
        table = {}
        for lineno, row in enumerate(reader, start=2):
            try:
                table[row["name"]] = float(row["label"])
            except ValueError:
                raise ColumnError(f"{path}: line {lineno}: label {row['label']!r} is not a number") from None
    missing = [g.name for g in graphs if g.name not in table]
    if missing:
        raise ColumnError(f"{path}: no label for graph {missing[0]!r}")
    return np.array([table[g.name] for g in graphs])


@click.command("finetune")
@click.option("--shards", "shard_globs", multiple=True, required=True)
@click.option("--labels", "labels_path", type=click.Path(exists=True, dir_okay=False), default=None,
              help="CSV with name,label columns; the atom count is the target when omitted.")
@click.option("--init", "init_path", type=click.Path(exists=True, dir_okay=False), default=None,
              help="Pretrained checkpoint to start from.")
@click.option("--steps", default=3000, show_default=True, type=click.IntRange(min=0))
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
@click.option("--overwrite", is_flag=True)
@config_options
def finetune(config, shard_globs, labels_path, init_path, steps, out_dir, overwrite):
    """Pooled-head regression with the noisy-node auxiliary loss."""
    graphs = read_shards(expand_inputs(shard_globs))
    labels = read_labels(labels_path, graphs) if labels_path else atom_count_labels(graphs)
    state = load_training_state(init_path, expected=config, fresh_optimizer=True)[0] if init_path else None
    prepare_out_dir(out_dir, overwrite)
    write_manifest(out_dir, "finetune", config, labels=labels_path or "atom-count", init=init_path, steps=steps)

    with MetricsWriter(os.path.join(out_dir, "metrics.csv")) as writer:
        state, scaler, _ = run_finetune(graphs, labels, config, steps, state=state, writer=writer)
    save_training_state(os.path.join(out_dir, "final.ept"), state, config)

    predictions = predict_labels(state.params, graphs, config, scaler)
    with open(os.path.join(out_dir, "predictions.csv"), "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["name", "label", "prediction"])
        for g, y, p in zip(graphs, labels, predictions):
            writer.writerow([g.name, repr(float(y)), repr(float(p))])
    click.echo(f"training MAE {float(np.mean(np.abs(predictions - labels))):.4f} over {len(graphs)} graphs")
