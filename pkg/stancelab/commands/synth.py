"""
Stancelab - Synth Command
Generate a synthetic polarized corpus with gold labels
"""

from pathlib import Path
from typing import List, Optional

import typer
from pydantic import ValidationError
from rich.console import Console

from ..core.errors import StancelabError
from ..core.synth import SynthParams, generate, independent_topics, plant_subgroups, save_synth
from .options import DETERMINISTIC_OPTION, SEED_OPTION, log_run_flags

console = Console()


def synth_cmd(
    users: int = typer.Option(500, "--users", help="Users per group"),
    tweets: float = typer.Option(20.0, "--tweets", help="Mean tweets per user and topic"),
    shared: int = typer.Option(200, "--shared", help="Shared vocabulary size"),
    exclusive: int = typer.Option(200, "--exclusive", help="Exclusive vocabulary size per group"),
    topic: Optional[List[str]] = typer.Option(None, "--topic", help="Topic name (repeatable)"),
    retweet_rate: float = typer.Option(0.3, "--retweet-rate", help="Share of tweets that are retweets"),
    cross_rate: float = typer.Option(0.05, "--cross-rate", help="Share of retweets crossing groups"),
    subgroups: int = typer.Option(1, "--subgroups", help="Planted sub-communities per group"),
    independent: bool = typer.Option(False, "--independent", help="Topics after the first split users at random"),
    out: Path = typer.Option(Path("stancelab-out"), "--out", help="Output directory"),
    seed: int = SEED_OPTION,
    deterministic: bool = DETERMINISTIC_OPTION,
):
    """Generate a synthetic corpus, gold labels, seeds and profiles"""
    console.print("[bold cyan]🧪 Synthetic corpus[/bold cyan]")
    log_run_flags("synth", seed, deterministic)

    try:
        params = SynthParams(
            n_users_per_group=users,
            n_tweets_per_user=tweets,
            vocab_shared=shared,
            vocab_exclusive_per_group=exclusive,
            topic_names=topic or ["topic"],
            retweet_rate=retweet_rate,
            cross_rate=cross_rate,
            seed=seed,
        )
        synth = independent_topics(params) if independent else generate(params)
        synth = plant_subgroups(synth, subgroups)
        paths = save_synth(synth, out)
    except ValidationError as e:
        console.print(f"[red]✗ Error: invalid parameters: {e}[/red]")
        raise typer.Exit(code=1)
    except (StancelabError, OSError) as e:
        console.print(f"[red]✗ Error: {e}[/red]")
        raise typer.Exit(code=1)

    console.print(f"[dim]{len(synth.corpus)} tweets, {len(synth.gold)} users, {len(synth.seed_subset)} seeds[/dim]")
    for name, path in paths.items():
        console.print(f"[green]✓ {name}: {path}[/green]")
