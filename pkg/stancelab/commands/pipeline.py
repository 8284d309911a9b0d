"""
Stancelab - Pipeline Command
Run every stage for every configured topic
"""

from pathlib import Path
from typing import Optional

import typer
from rich.console import Console
from rich.table import Table

from ..core.config import load_config
from ..core.errors import StageError, StancelabError
from ..core.pipeline import PipelineResult, run_pipeline

console = Console()


def _summary(result: PipelineResult) -> Table:
    table = Table(title="Topics")
    table.add_column("Topic", style="cyan")
    table.add_column("Users", justify="right")
    table.add_column("Clusters", justify="right")
    table.add_column("Noise", justify="right")
    table.add_column("Macro F1", justify="right")
    table.add_column("RWC", justify="right")
    for r in result.reports:
        f1 = f"{r.metrics['macro_f1']:.3f}" if r.metrics else "-"
        score = f"{r.rwc['rwc']:.3f}" if r.rwc else "-"
        table.add_row(r.topic, str(r.n_users), str(r.n_clusters), f"{r.noise_fraction:.1%}", f1, score)
    return table


def pipeline_cmd(
    config: Path = typer.Argument(..., help="Pipeline configuration (YAML)"),
    seed: Optional[int] = typer.Option(None, "--seed", help="Master seed (overrides config)"),
    out: Optional[Path] = typer.Option(None, "--out", help="Output directory (overrides config)"),
    deterministic: Optional[bool] = typer.Option(
        None, "--deterministic/--parallel", help="Sequential, byte-reproducible run"
    ),
):
    """Filter, embed, project, cluster, evaluate and compare topics"""
    console.print("[bold cyan]🚀 Stancelab pipeline[/bold cyan]")
    console.print(f"[dim]Config: {config}[/dim]\n")

    try:
        cfg = load_config(config, {"seed": seed, "out": out, "deterministic": deterministic})
        console.print(f"[dim]{len(cfg.topics)} topics, seed {cfg.seed}, out {cfg.out}[/dim]")
        result = run_pipeline(cfg)
    except StageError as e:
        console.print(f"[red]✗ Error: {e}[/red]")
        console.print("[dim]Partial reports were written.[/dim]")
        raise typer.Exit(code=1)
    except (StancelabError, OSError) as e:
        console.print(f"[red]✗ Error: {e}[/red]")
        raise typer.Exit(code=1)

    console.print(_summary(result))
    for pair, value in result.ami_pairs().items():
        shown = "n/a" if value is None else f"{value:.3f}"
        console.print(f"[dim]AMI {pair}: {shown}[/dim]")
    console.print(f"[green]✓ Reports written to {cfg.out}[/green]")
