import os

import click

from blockgraph.shards import read_shards
from commands.common import config_options, expand_inputs, prepare_out_dir, write_manifest
from train.checkpointing import load_training_state, save_training_state
from train.loop import pretrain as run_pretrain
from train.metrics import MetricsWriter


@click.command("pretrain")
@click.option("--shards", "shard_globs", multiple=True, required=True, help="EPTG shard files or globs.")
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
@click.option("--resume", type=click.Path(exists=True, dir_okay=False), default=None,
              help="Continue from a checkpoint written by an earlier run.")
@click.option("--overwrite", is_flag=True)
@config_options
def pretrain(config, shard_globs, out_dir, resume, overwrite):
    """Denoising pretraining; writes checkpoints and metrics.csv."""
    paths = expand_inputs(shard_globs)
    graphs = read_shards(paths)
    state = load_training_state(resume, expected=config)[0] if resume else None
    prepare_out_dir(out_dir, overwrite)
    write_manifest(out_dir, "pretrain", config, shards=paths, resume=resume)

    def checkpoint(label, current):
        path = os.path.join(out_dir, f"{label}.ept")
        save_training_state(path, current, config)
        click.echo(f"checkpoint {path} (step {current.step})")

    with MetricsWriter(os.path.join(out_dir, "metrics.csv")) as writer:
        state, history = run_pretrain(graphs, config, state=state, writer=writer,
                                      on_checkpoint=checkpoint, progress=True)
    for m in history:
        click.echo(f"epoch {m.epoch}: loss {m.loss:.6g} (T {m.loss_T:.6g}, R {m.loss_R:.6g})")
    click.echo(f"finished at step {state.step}, epoch {state.epoch}")
