"""
Stancelab - Lexicon Command
Prominent terms per cluster and word-cloud data
"""

from pathlib import Path
from typing import Optional

import typer
from rich.console import Console

from ..core.cluster import load_cluster_labels
from ..core.corpus import load_corpus
from ..core.errors import StancelabError
from ..core.lexicon import cluster_terms, load_stopwords, save_terms, save_wordcloud
from .options import DETERMINISTIC_OPTION, SEED_OPTION, log_run_flags

console = Console()


def lexicon_cmd(
    clusters: Path = typer.Option(..., "--clusters", help="Cluster CSV user_id,cluster"),
    corpus: Path = typer.Option(..., "--corpus", help="Topic corpus (JSONL)"),
    top: int = typer.Option(50, "--top", help="Terms per cluster"),
    stopwords: Optional[Path] = typer.Option(None, "--stopwords", help="Stopword file (default: packaged list)"),
    out: Path = typer.Option(Path("stancelab-out"), "--out", help="Output directory"),
    seed: int = SEED_OPTION,
    deterministic: bool = DETERMINISTIC_OPTION,
):
    """Rank each cluster's characteristic terms"""
    console.print("[bold cyan]🔤 Lexicon[/bold cyan]")
    log_run_flags("lexicon", seed, deterministic)

    try:
        terms = cluster_terms(load_corpus(corpus), load_cluster_labels(clusters), top, load_stopwords(stopwords))
        for cid, entries in sorted(terms.items()):
            save_terms(entries, out / f"terms_cluster{cid}.csv")
            save_wordcloud(entries, out / f"wordcloud_cluster{cid}.json")
    except (StancelabError, OSError) as e:
        console.print(f"[red]✗ Error: {e}[/red]")
        raise typer.Exit(code=1)

    for cid, entries in sorted(terms.items()):
        preview = ", ".join(e.term for e in entries[:8])
        console.print(f"[cyan]cluster {cid}[/cyan] [dim]{preview}[/dim]")
    console.print(f"[green]✓ Saved to {out}[/green]")
