"""
Stancelab - RWC Command
Random Walk Controversy between two user groups
"""

from pathlib import Path
from typing import Optional

import typer
from pydantic import ValidationError
from rich.console import Console

from ..core.cluster import load_cluster_labels
from ..core.corpus import load_corpus
from ..core.errors import StancelabError
from ..core.pipeline import write_json
from ..core.polarize import RwcParams, build_user_graph, groups_from_clusters, load_groups, rwc
from .options import DETERMINISTIC_OPTION, SEED_OPTION, log_run_flags

console = Console()


def rwc_cmd(
    corpus: Path = typer.Option(..., "--corpus", help="Tweet corpus (JSONL)"),
    groups: Optional[Path] = typer.Option(None, "--groups", help="Group CSV user_id,group (A/B)"),
    clusters: Optional[Path] = typer.Option(None, "--clusters", help="Cluster CSV; clusters --pair become A and B"),
    pair: str = typer.Option("0,1", "--pair", help="Cluster ids used as groups A,B"),
    n_prominent: int = typer.Option(10, "--n-prominent", help="Prominent nodes per group"),
    mode: str = typer.Option("exact", "--mode", help="exact or monte_carlo"),
    walks: int = typer.Option(10_000, "--walks", help="Monte Carlo walks per group"),
    out: Path = typer.Option(Path("stancelab-out"), "--out", help="Output directory"),
    seed: int = SEED_OPTION,
    deterministic: bool = DETERMINISTIC_OPTION,
):
    """Compute RWC over the retweet-similarity graph"""
    console.print("[bold cyan]🔀 Random Walk Controversy[/bold cyan]")
    log_run_flags("rwc", seed, deterministic)
    if (groups is None) == (clusters is None):
        console.print("[red]✗ Error: pass exactly one of --groups or --clusters[/red]")
        raise typer.Exit(code=1)

    try:
        params = RwcParams(n_prominent=n_prominent, mode=mode, n_walks=walks)
        if groups is not None:
            membership = load_groups(groups)
        else:
            first, second = (int(x) for x in pair.split(","))
            membership = groups_from_clusters(load_cluster_labels(clusters), first, second)
        graph = build_user_graph(load_corpus(corpus), membership)
        result = rwc(graph, params.n_prominent, params.mode, params.n_walks, seed)
        write_json(out / "rwc.json", dict(result.to_dict(), dropped=graph.dropped))
    except ValidationError as e:
        console.print(f"[red]✗ Error: invalid parameters: {e}[/red]")
        raise typer.Exit(code=1)
    except (StancelabError, OSError, ValueError) as e:
        console.print(f"[red]✗ Error: {e}[/red]")
        raise typer.Exit(code=1)

    console.print(
        f"[dim]P_AA={result.p_aa:.3f} P_AB={result.p_ab:.3f} P_BA={result.p_ba:.3f} P_BB={result.p_bb:.3f}[/dim]"
    )
    console.print(f"[bold]RWC = {result.rwc:.3f}[/bold]")
    console.print(f"[green]✓ Saved to {out / 'rwc.json'}[/green]")
