"""
Stancelab - Command Line
Typer application wiring every subcommand
"""

import typer

from . import __version__
from .commands import (
    ami_cmd,
    cluster_cmd,
    embed_cmd,
    eval_cmd,
    ingest_cmd,
    labelprop_cmd,
    lexicon_cmd,
    pipeline_cmd,
    project_cmd,
    rwc_cmd,
    synth_cmd,
)
from .utils import setup_logging

app = typer.Typer(help="Unsupervised stance detection and polarization analysis for tweet corpora")

app.command(name="ingest")(ingest_cmd)
app.command(name="synth")(synth_cmd)
app.command(name="labelprop")(labelprop_cmd)
app.command(name="embed")(embed_cmd)
app.command(name="project")(project_cmd)
app.command(name="cluster")(cluster_cmd)
app.command(name="eval")(eval_cmd)
app.command(name="rwc")(rwc_cmd)
app.command(name="ami")(ami_cmd)
app.command(name="lexicon")(lexicon_cmd)
app.command(name="pipeline")(pipeline_cmd)


def _show_version(value: bool) -> None:
    if value:
        print(f"stancelab {__version__}")
        raise typer.Exit()


@app.callback()
def main_callback(
    debug: bool = typer.Option(False, "--debug", help="Show debug logs"),
    version: bool = typer.Option(False, "--version", "-v", callback=_show_version, is_eager=True, help="Show version"),
):
    """Stancelab - stance detection, polarization and cross-topic alignment"""
    setup_logging(debug)
