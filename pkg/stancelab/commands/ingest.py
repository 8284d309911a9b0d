"""
Stancelab - Ingest Command
Validate a JSONL corpus and write its load statistics
"""

from pathlib import Path
from typing import List, Optional

import typer
from rich.console import Console
from rich.table import Table

from ..core.corpus import corpus_stats, filter_language, load_corpus_with_report, save_corpus
from ..core.errors import StancelabError
from ..core.pipeline import write_json
from .options import DETERMINISTIC_OPTION, SEED_OPTION, log_run_flags

console = Console()


def ingest_cmd(
    corpus: Path = typer.Option(..., "--in", help="Tweet corpus (JSONL, one tweet per line)"),
    report: Path = typer.Option(Path("stats.json"), "--report", help="Statistics JSON"),
    out: Optional[Path] = typer.Option(None, "--out", help="Canonical corpus JSONL (optional)"),
    lang: Optional[List[str]] = typer.Option(None, "--lang", help="Keep only these language tags (repeatable)"),
    seed: int = SEED_OPTION,
    deterministic: bool = DETERMINISTIC_OPTION,
):
    """Load and validate a corpus, then report what was kept"""
    console.print("[bold cyan]📥 Ingest[/bold cyan]")
    console.print(f"[dim]Corpus: {corpus}[/dim]\n")
    log_run_flags("ingest", seed, deterministic)

    try:
        loaded, load_report = load_corpus_with_report(corpus)
        if lang:
            loaded = filter_language(loaded, lang)
        if out is not None:
            save_corpus(loaded, out)
        stats = corpus_stats(loaded, load_report)
        write_json(report, stats)
    except (StancelabError, OSError) as e:
        console.print(f"[red]✗ Error: {e}[/red]")
        raise typer.Exit(code=1)

    table = Table(title="Corpus")
    table.add_column("Field", style="cyan")
    table.add_column("Value", justify="right")
    table.add_row("Tweets", str(stats["n_tweets"]))
    table.add_row("Users", str(stats["n_users"]))
    table.add_row("Retweets", str(stats["n_retweets"]))
    table.add_row("Skipped lines", str(load_report.n_skipped))
    console.print(table)
    if out is not None:
        console.print(f"[green]✓ Saved to {out}[/green]")
    console.print(f"[green]✓ Report written to {report}[/green]")
