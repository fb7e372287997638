import io
import os

import click

from commands.common import config_options, prepare_out_dir, write_manifest
from errors import CheckFailure
from verify.checks import MUTATIONS
from verify.suite import CHECKS, run_suite, summary, write_report


@click.command("verify")
@click.option("--only", multiple=True, type=click.Choice(list(CHECKS)), help="Run just these checks.")
@click.option("--inject", type=click.Choice(list(MUTATIONS)), default=None,
              help="Plant a known defect; the matching check must fail.")
@click.option("--out", "out_dir", type=click.Path(file_okay=False), default=None,
              help="Write report.csv and a manifest here instead of printing the CSV.")
@click.option("--overwrite", is_flag=True)
@config_options
def verify(config, only, inject, out_dir, overwrite):
    """Run the property suite; exits 3 when any check fails."""
    if out_dir:
        prepare_out_dir(out_dir, overwrite)
        write_manifest(out_dir, "verify", config, only=list(only), inject=inject)
    reports = run_suite(config, seed=config.train.seed, only=only or None, inject=inject,
                        on_report=lambda r: click.echo(f"{r.status}: {r.name}", err=True))
    if out_dir:
        write_report(os.path.join(out_dir, "report.csv"), reports)
    else:
        buffer = io.StringIO()
        write_report(buffer, reports)
        click.echo(buffer.getvalue(), nl=False)
    click.echo(summary(reports))
    failed = [r.name for r in reports if not r.passed]
    if failed:
        raise CheckFailure(f"{len(failed)} check(s) failed: {', '.join(failed)}")
