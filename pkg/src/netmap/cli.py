"""Command-line entry point.

    netmap run CONFIG [--stage NAME ...] [--out DIR] [--seed N] [--dry-run]
    netmap STAGE CONFIG [--out DIR] [--seed N] [--dry-run]
    netmap show-config CONFIG
    netmap synth DIR

Exit status: 0 on success, 1 when the config or command line is invalid,
2 when a stage fails.
"""

from __future__ import annotations

import logging
import sys

import click

from . import __version__
from .config import validate_config
from .errors import ConfigError, StageError
from .pipeline import STAGES, Pipeline

EXIT_OK, EXIT_INVALID, EXIT_STAGE = 0, 1, 2

log = logging.getLogger("netmap")


def _load(config, out, seed):
    cfg = validate_config(config)
    return cfg.with_overrides(output=out, seed=seed)


def _execute(config, stages, out, seed, dry_run):
    cfg = _load(config, out, seed)
    if dry_run:
        click.echo(f"{config}: ok ({len(cfg.input_files())} input files, stages: {', '.join(stages)})")
        return
    pipe = Pipeline(cfg)
    pipe.out.mkdir(parents=True, exist_ok=True)
    for name in stages:
        written = pipe.run_stage(name)
        log.info("%s: wrote %s", name, ", ".join(written))
    click.echo(f"done: {len(stages)} stage(s), output in {pipe.out}")


def _common(fn):
    fn = click.option("--dry-run", is_flag=True, help="Validate the config and inputs, then stop.")(fn)
    fn = click.option("--seed", type=int, default=None, help="Override the layout seed.")(fn)
    fn = click.option("--out", type=click.Path(file_okay=False), default=None, help="Override the output directory.")(fn)
    fn = click.argument("config", type=click.Path(dir_okay=False))(fn)
    return fn


@click.group()
@click.version_option(__version__, prog_name="netmap")
@click.option("-v", "--verbose", count=True, help="More logging (repeatable).")
def cli(verbose):
    """Audience segmentation maps from interaction graphs and shared links."""
    level = logging.WARNING - 10 * min(verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)


@cli.command()
@_common
@click.option("--stage", "stages", multiple=True, type=click.Choice(STAGES),
              help="Run only these stages (repeatable); default is all of them.")
def run(config, out, seed, dry_run, stages):
    """Run the pipeline, or the chosen stages in pipeline order."""
    chosen = [s for s in STAGES if s in stages] if stages else list(STAGES)
    _execute(config, chosen, out, seed, dry_run)


def _stage_command(name):
    @_common
    def command(config, out, seed, dry_run):
        _execute(config, [name], out, seed, dry_run)

    command.__doc__ = f"Run only the {name} stage against existing upstream outputs."
    return cli.command(name=name)(command)


for _name in STAGES:
    _stage_command(_name)


@cli.command("show-config")
@click.argument("config", type=click.Path(dir_okay=False))
def show_config(config):
    """Print the config with every default filled in."""
    click.echo(validate_config(config, check_files=False).dump(), nl=False)


@cli.command()
@click.argument("directory", type=click.Path(file_okay=False))
def synth(directory):
    """Write the synthetic demo dataset and its config into DIRECTORY."""
    from .synth import generate

    path = generate(directory)
    click.echo(f"wrote {path}")


def main(argv=None) -> int:
    try:
        cli.main(args=argv, prog_name="netmap", standalone_mode=False)
    except ConfigError as exc:
        for line in exc.errors:
            click.echo(f"error: {line}", err=True)
        return EXIT_INVALID
    except StageError as exc:
        click.echo(f"error: {exc}", err=True)
        return EXIT_STAGE
    except click.exceptions.Abort:
        click.echo("aborted", err=True)
        return EXIT_INVALID
    except click.ClickException as exc:
        exc.show()
        return EXIT_INVALID
    except click.exceptions.Exit as exc:
        return exc.exit_code
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
