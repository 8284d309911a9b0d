"""
Stancelab - AMI Command
Adjusted mutual information between topic clusterings
"""

from pathlib import Path
from typing import List

import typer
from rich.console import Console

from ..core.cluster import load_cluster_labels
from ..core.errors import StancelabError
from ..core.evaluate import ami_matrix, save_ami_matrix
from ..plots import emit_heatmap_svg
from .options import DETERMINISTIC_OPTION, SEED_OPTION, log_run_flags

console = Console()


def _topic_name(path: Path) -> str:
    """``name=path`` names explicitly; ``<topic>/clusters.csv`` uses the folder name."""
    return path.parent.name if path.stem == "clusters" and path.parent.name else path.stem


def ami_cmd(
    clusters: List[str] = typer.Argument(..., help="Cluster CSVs, optionally as NAME=PATH"),
    out: Path = typer.Option(Path("stancelab-out"), "--out", help="Output directory"),
    seed: int = SEED_OPTION,
    deterministic: bool = DETERMINISTIC_OPTION,
):
    """AMI matrix and heatmap across topics"""
    console.print("[bold cyan]🔗 Cross-topic AMI[/bold cyan]")
    log_run_flags("ami", seed, deterministic)

    try:
        partitions = {}
        for item in clusters:
            name, sep, location = item.partition("=")
            path = Path(location) if sep else Path(item)
            partitions[name if sep else _topic_name(path)] = load_cluster_labels(path)
        topics, matrix = ami_matrix(partitions)
        save_ami_matrix(topics, matrix, out / "ami.csv")
        emit_heatmap_svg(matrix, out / "ami.svg", names=topics)
    except (StancelabError, OSError) as e:
        console.print(f"[red]✗ Error: {e}[/red]")
        raise typer.Exit(code=1)

    for i, a in enumerate(topics):
        for j in range(i + 1, len(topics)):
            console.print(f"[dim]{a} / {topics[j]}: {matrix[i, j]:.3f}[/dim]")
    console.print(f"[green]✓ Saved to {out / 'ami.csv'} and {out / 'ami.svg'}[/green]")
