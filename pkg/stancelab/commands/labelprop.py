"""
Stancelab - Labelprop Command
Seed labels (file or profile rules) and retweet label propagation
"""

from pathlib import Path
from typing import Optional

import typer
from pydantic import ValidationError
from rich.console import Console
from rich.table import Table

from ..core.corpus import load_corpus
from ..core.errors import StancelabError
from ..core.evaluate import load_gold
from ..core.labelprop import (
    PropagationParams,
    Stance,
    audit_labels,
    load_profiles,
    load_seed_rules,
    load_seeds,
    propagate,
    save_labels,
    seeds_from_profiles,
)
from ..core.pipeline import write_json
from .options import DETERMINISTIC_OPTION, SEED_OPTION, log_run_flags

console = Console()


def labelprop_cmd(
    corpus: Path = typer.Option(..., "--corpus", help="Tweet corpus (JSONL)"),
    seeds: Optional[Path] = typer.Option(None, "--seeds", help="Seed CSV user_id,label"),
    profiles: Optional[Path] = typer.Option(None, "--profiles", help="Profile JSONL for rule-based seeding"),
    rules: Optional[Path] = typer.Option(None, "--rules", help="Seed rule YAML (default: packaged rules)"),
    min_retweets: int = typer.Option(10, "--min-retweets", help="Endorsed retweets needed to take a side"),
    max_iterations: int = typer.Option(20, "--max-iterations", help="Propagation round cap"),
    gold: Optional[Path] = typer.Option(None, "--gold", help="Gold CSV for an accuracy audit"),
    out: Path = typer.Option(Path("labels.csv"), "--out", help="Labels CSV user_id,label,source,iteration"),
    seed: int = SEED_OPTION,
    deterministic: bool = DETERMINISTIC_OPTION,
):
    """Propagate pro/anti labels over retweets"""
    console.print("[bold cyan]🏷  Label propagation[/bold cyan]")
    log_run_flags("labelprop", seed, deterministic)
    if seeds is None and profiles is None:
        console.print("[red]✗ Error: pass --seeds or --profiles[/red]")
        raise typer.Exit(code=1)

    try:
        params = PropagationParams(min_retweets=min_retweets, max_iterations=max_iterations)
        data = load_corpus(corpus)
        if seeds is not None:
            seed_labels = load_seeds(seeds)
        else:
            seed_labels, conflicts = seeds_from_profiles(load_profiles(profiles), load_seed_rules(rules))
            console.print(f"[dim]{len(seed_labels)} seeds from profiles, {len(conflicts)} conflicting[/dim]")
        result = propagate(data, seed_labels, params)
        save_labels(result, out)
        summary = {"trace": [list(t) for t in result.trace]}
        if gold is not None:
            summary["audit"] = audit_labels(result, load_gold(gold))
        write_json(out.with_suffix(".json"), summary)
    except ValidationError as e:
        console.print(f"[red]✗ Error: invalid parameters: {e}[/red]")
        raise typer.Exit(code=1)
    except (StancelabError, OSError) as e:
        console.print(f"[red]✗ Error: {e}[/red]")
        raise typer.Exit(code=1)

    table = Table(title="Propagation rounds")
    table.add_column("Round", justify="right")
    table.add_column("New pro", justify="right", style="green")
    table.add_column("New anti", justify="right", style="red")
    for i, entry in enumerate(result.trace, start=1):
        table.add_row(str(i), str(entry.new_pro), str(entry.new_anti))
    console.print(table)
    console.print(
        f"[dim]pro={len(result.by_stance(Stance.PRO))} anti={len(result.by_stance(Stance.ANTI))}[/dim]"
    )
    if "audit" in summary:
        console.print(f"[dim]audit: {summary['audit']}[/dim]")
    console.print(f"[green]✓ Saved to {out}[/green]")
