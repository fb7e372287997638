import logging
import sys

import click

from commands import COMMANDS
from commands.common import config_options
from config import VERSION, configure_logging
from errors import EPTError

logger = logging.getLogger("ept")


@click.group()
@click.version_option(VERSION, prog_name="ept")
@click.option("--log-level", default=None, help="Overrides EPT_LOG_LEVEL.")
def cli(log_level):
    """Equivariant block-graph transformer: preprocess, pretrain, finetune, verify."""
    configure_logging(log_level)


@cli.command("info")
@config_options
def info(config):
    """Print the resolved configuration and its model hash."""
    click.echo(f"ept {VERSION}")
    click.echo(f"model_hash = {config.model_hash()}")
    click.echo(config.to_toml())


for command in COMMANDS:
    cli.add_command(command)


def main(argv=None):
    """Run the command line and return its exit code (0 ok, 1 usage, 2 data, 3 check failure)."""
    try:
        cli.main(args=argv, prog_name="ept", standalone_mode=False)
    except click.exceptions.Exit as e:
        return e.exit_code
    except click.UsageError as e:
        e.show()
        return 1
    except click.ClickException as e:
        e.show()
        return e.exit_code
    except click.Abort:
        click.echo("aborted", err=True)
        return 1
    except EPTError as e:
        logger.debug("command failed", exc_info=True)
        click.echo(f"error: {e}", err=True)
        return e.exit_code
    return 0


if __name__ == "__main__":
    sys.exit(main())
