import csv
import os

import click
import numpy as np

from commands.common import config_options, load_graph_file, prepare_out_dir, write_manifest
from config import DENOISE_MODES
from denoise.igso3 import save_table, table_for
from denoise.perturb import perturb
from models import RawMolecule
from molio.vocab import element_of_code
from molio.xyz import write_xyz

TARGET_COLUMNS = ("frame", "index", "eps_x", "eps_y", "eps_z",
                  "omega_x", "omega_y", "omega_z", "score_x", "score_y", "score_z")


def sample_frames(graph, mode, sigma_t, sigma_r, n, rng):
    """``n`` independent perturbations of one graph, drawn in order from ``rng``."""
    return [perturb(mode, graph.coords, graph.block_of, sigma_t, sigma_r, rng) for _ in range(n)]


def target_rows(frame, sample):
    """One row per atom (atom mode) or per block (block modes)."""
    if sample.mode == "atom":
        eps, omega, score = sample.eps_atom, None, None
    else:
        eps, omega, score = sample.eps_block, sample.omega, sample.score
    zeros = np.zeros_like(eps)
    omega = zeros if omega is None else omega
    score = zeros if score is None else score
    for i in range(len(eps)):
        yield [frame, i, *map(repr, map(float, eps[i])), *map(repr, map(float, omega[i])),
               *map(repr, map(float, score[i]))]


@click.command("sample-noise")
@click.argument("graph_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--mode", type=click.Choice(DENOISE_MODES), default="block-C", show_default=True)
@click.option("--sigma-t", type=click.FloatRange(min=0), default=None, help="Defaults to train.sigma_t.")
@click.option("--sigma-r", type=click.FloatRange(min=0), default=None, help="Defaults to train.sigma_r.")
@click.option("-n", "count", type=click.IntRange(min=0), default=10, show_default=True)
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
@click.option("--overwrite", is_flag=True)
@config_options
def sample_noise(config, graph_file, mode, sigma_t, sigma_r, count, out_dir, overwrite):
    """Write perturbed frames and their noise targets for one structure."""
    sigma_t = config.train.sigma_t if sigma_t is None else sigma_t
    sigma_r = config.train.sigma_r if sigma_r is None else sigma_r
    graph = load_graph_file(graph_file, config.graph)[0]
    prepare_out_dir(out_dir, overwrite)
    write_manifest(out_dir, "sample-noise", config, graph=graph_file, mode=mode,
                   sigma_t=sigma_t, sigma_r=sigma_r, n=count)

    samples = sample_frames(graph, mode, sigma_t, sigma_r, count, np.random.default_rng(config.train.seed))
    elements = [element_of_code(c) or "X" for c in graph.atom_code]
    with open(os.path.join(out_dir, "frames.xyz"), "w", encoding="utf-8") as fh:
        for k, sample in enumerate(samples):
            frame = RawMolecule(elements, sample.perturbed, name=graph.name)
            fh.write(write_xyz(frame, comment=f"{graph.name} frame={k} mode={mode} sigma_t={sigma_t} sigma_r={sigma_r}"))
    with open(os.path.join(out_dir, "targets.csv"), "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(TARGET_COLUMNS)
        for k, sample in enumerate(samples):
            writer.writerows(target_rows(k, sample))
    if mode == "block-C" and sigma_r > 0:
        save_table(os.path.join(out_dir, "igso3.igs3"), table_for(sigma_r))
    click.echo(f"{count} frames of {graph.name or graph_file} ({mode}) written to {out_dir}")
