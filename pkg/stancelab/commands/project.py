"""
Stancelab - Project Command
2-D layout of user vectors, with an optional SVG scatter
"""

from pathlib import Path
from typing import Optional

import typer
from pydantic import ValidationError
from rich.console import Console

from ..core.embed import load_user_vectors, stack_user_vectors
from ..core.errors import StancelabError
from ..core.evaluate import load_gold
from ..core.project import ProjectionParams, clamp_neighbors, project, save_layout, trustworthiness
from .options import DETERMINISTIC_OPTION, SEED_OPTION, log_run_flags

console = Console()


def project_cmd(
    vectors: Path = typer.Option(..., "--vectors", help="User vectors (JSONL)"),
    n_neighbors: int = typer.Option(15, "--n-neighbors", help="kNN graph size"),
    min_dist: float = typer.Option(0.1, "--min-dist", help="Minimum embedded distance"),
    epochs: int = typer.Option(500, "--epochs", "--n-epochs", help="Optimization epochs"),
    metric: str = typer.Option("euclidean", "--metric", help="euclidean or cosine"),
    svg: Optional[Path] = typer.Option(None, "--svg", help="Scatter plot SVG, one color per label"),
    labels: Optional[Path] = typer.Option(None, "--labels", help="CSV user_id,label coloring the scatter"),
    out: Path = typer.Option(Path("layout.csv"), "--out", help="Layout CSV user_id,x,y"),
    seed: int = SEED_OPTION,
    deterministic: bool = DETERMINISTIC_OPTION,
):
    """Project user vectors to two dimensions"""
    console.print("[bold cyan]🗺  Project[/bold cyan]")
    log_run_flags("project", seed, deterministic)

    try:
        ids, matrix = stack_user_vectors(load_user_vectors(vectors))
        params = ProjectionParams(
            n_neighbors=n_neighbors,
            min_dist=min_dist,
            n_epochs=epochs,
            metric=metric,
            seed=seed,
            parallel=not deterministic,
        )
        layout = project(matrix, clamp_neighbors(params, len(ids)), ids)
        score = trustworthiness(matrix, layout)
        path = save_layout(layout, out)
        if svg is not None:
            from ..plots import emit_scatter_svg

            emit_scatter_svg(layout, load_gold(labels) if labels is not None else None, svg, title=vectors.stem)
    except ValidationError as e:
        console.print(f"[red]✗ Error: invalid parameters: {e}[/red]")
        raise typer.Exit(code=1)
    except (StancelabError, OSError) as e:
        console.print(f"[red]✗ Error: {e}[/red]")
        raise typer.Exit(code=1)

    console.print(f"[dim]{len(ids)} users, trustworthiness {score:.3f}[/dim]")
    console.print(f"[green]✓ Saved to {path}[/green]")
    if svg is not None:
        console.print(f"[green]✓ Scatter written to {svg}[/green]")
