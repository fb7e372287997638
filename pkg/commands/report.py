import os

import click
import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from commands.common import prepare_out_dir  # noqa: E402
from errors import ColumnError  # noqa: E402
from train.metrics import read_metrics  # noqa: E402


def _plot(path, steps, series, ylabel, log=False):
    fig, ax = plt.subplots(figsize=(6, 3.5))
    for label, values in series.items():
        ax.plot(steps, values, label=label, linewidth=1)
    ax.set_xlabel("step")
    ax.set_ylabel(ylabel)
    if log:
        ax.set_yscale("log")
    if len(series) > 1:
        ax.legend()
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)


def summarize(rows):
    losses = [r["loss"] for r in rows]
    best = min(range(len(rows)), key=losses.__getitem__)
    return {
        "steps": len(rows),
        "first_loss": losses[0],
        "last_loss": losses[-1],
        "min_loss": losses[best],
        "min_step": int(rows[best]["step"]),
        "final_lr": rows[-1]["lr"],
    }


def render_report(metrics_path, out_dir):
    rows = read_metrics(metrics_path)
    if not rows:
        raise ColumnError(f"{metrics_path}: no rows")
    steps = [r["step"] for r in rows]
    log = all(r["loss"] > 0 for r in rows)
    _plot(os.path.join(out_dir, "loss.svg"), steps,
          {k: [r[k] for r in rows] for k in ("loss", "loss_T", "loss_R")}, "loss", log=log)
    _plot(os.path.join(out_dir, "lr.svg"), steps, {"lr": [r["lr"] for r in rows]}, "learning rate")
    stats = summarize(rows)
    with open(os.path.join(out_dir, "summary.txt"), "w", encoding="utf-8") as fh:
        for key, value in stats.items():
            fh.write(f"{key}: {value}\n")
    return stats


@click.command("report")
@click.argument("metrics_csv", type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
@click.option("--overwrite", is_flag=True)
def report(metrics_csv, out_dir, overwrite):
    """Plot loss and learning-rate curves from metrics.csv."""
    prepare_out_dir(out_dir, overwrite)
    stats = render_report(metrics_csv, out_dir)
    click.echo(f"{stats['steps']} steps: loss {stats['first_loss']:.6g} -> {stats['last_loss']:.6g} "
               f"(min {stats['min_loss']:.6g} at step {stats['min_step']})")
