"""
Stancelab - Cluster Command
Density-based clustering of a 2-D layout
"""

from pathlib import Path
from typing import Optional

import typer
from pydantic import ValidationError
from rich.console import Console

from ..core.cluster import ClusterParams, cluster, save_assignment
from ..core.errors import StancelabError
from ..core.project import load_layout
from .options import DETERMINISTIC_OPTION, SEED_OPTION, log_run_flags

console = Console()


def cluster_cmd(
    layout: Path = typer.Option(..., "--layout", help="Layout CSV user_id,x,y"),
    min_cluster_size: int = typer.Option(25, "--min-cluster-size", help="Smallest cluster"),
    min_samples: Optional[int] = typer.Option(None, "--min-samples", help="Core distance neighbor (default: min cluster size)"),
    out: Path = typer.Option(Path("clusters.csv"), "--out", help="Cluster CSV user_id,cluster"),
    tree: Optional[Path] = typer.Option(None, "--tree", help="Condensed tree JSON (default: condensed_tree.json next to --out)"),
    seed: int = SEED_OPTION,
    deterministic: bool = DETERMINISTIC_OPTION,
):
    """Cluster a layout and save labels plus the condensed tree"""
    console.print("[bold cyan]🧩 Cluster[/bold cyan]")
    log_run_flags("cluster", seed, deterministic)
    tree_path = tree if tree is not None else out.with_name("condensed_tree.json")

    try:
        params = ClusterParams(min_cluster_size=min_cluster_size, min_samples=min_samples)
        assignment = cluster(load_layout(layout), params)
        path = save_assignment(assignment, out, tree_path)
    except ValidationError as e:
        console.print(f"[red]✗ Error: invalid parameters: {e}[/red]")
        raise typer.Exit(code=1)
    except (StancelabError, OSError) as e:
        console.print(f"[red]✗ Error: {e}[/red]")
        raise typer.Exit(code=1)

    console.print(
        f"[dim]{assignment.n_clusters} clusters {assignment.sizes}, noise {assignment.noise_fraction:.1%}[/dim]"
    )
    console.print(f"[green]✓ Saved to {path}[/green]")
