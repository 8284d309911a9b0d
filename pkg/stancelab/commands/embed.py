"""
Stancelab - Embed Command
Per-user mean vectors for one topic
"""

from pathlib import Path
from typing import List, Optional

import typer
from pydantic import ValidationError
from rich.console import Console

from ..core.config import load_config
from ..core.corpus import TopicSpec, filter_topic, fold_case, load_corpus
from ..core.embed import HashEmbedder, HashEmbedderParams, load_embeddings, save_user_vectors, user_vectors
from ..core.errors import ConfigError, StancelabError
from .options import DETERMINISTIC_OPTION, SEED_OPTION, log_run_flags

console = Console()


def resolve_topic(name: str, keywords: Optional[List[str]], config: Optional[Path]) -> TopicSpec:
    """Explicit keywords win; then the named topic of a config file; else the name itself."""
    if keywords:
        return TopicSpec(name=name, keywords=frozenset(fold_case(k) for k in keywords))
    if config is not None:
        for spec in load_config(config, check_paths=False).topic_specs:
            if spec.name == name:
                return spec
        raise ConfigError(f"topic '{name}' is not configured in {config}")
    return TopicSpec(name=name, keywords=frozenset({fold_case(name)}))


def embed_cmd(
    corpus: Path = typer.Option(..., "--corpus", help="Tweet corpus (JSONL)"),
    topic: str = typer.Option(..., "--topic", help="Topic name"),
    keyword: Optional[List[str]] = typer.Option(None, "--keyword", help="Topic keyword (repeatable)"),
    config: Optional[Path] = typer.Option(None, "--config", help="Pipeline YAML whose topics supply the keywords"),
    embeddings: Optional[Path] = typer.Option(None, "--embeddings", help="Tweet vectors (.stlv or JSONL)"),
    dim: int = typer.Option(512, "--hash-dim", "--dim", help="Hash embedder dimension"),
    salt: int = typer.Option(0, "--salt", help="Hash embedder salt"),
    out: Optional[Path] = typer.Option(None, "--out", help="User vectors JSONL (default: <topic>_users.jsonl)"),
    seed: int = SEED_OPTION,
    deterministic: bool = DETERMINISTIC_OPTION,
):
    """Compute user vectors for a topic"""
    console.print(f"[bold cyan]🔢 Embed[/bold cyan] [dim]{topic}[/dim]")
    log_run_flags("embed", seed, deterministic)
    target = out if out is not None else Path(f"{topic}_users.jsonl")

    try:
        spec = resolve_topic(topic, keyword, config)
        embedder = HashEmbedder(HashEmbedderParams(dim=dim, salt=salt))
        vectors = load_embeddings(embeddings, dim=dim) if embeddings is not None else {}
        topic_corpus = filter_topic(load_corpus(corpus), spec)
        users = user_vectors(topic_corpus, vectors, embedder)
        path = save_user_vectors(users, target)
    except ValidationError as e:
        console.print(f"[red]✗ Error: invalid parameters: {e}[/red]")
        raise typer.Exit(code=1)
    except (StancelabError, OSError) as e:
        console.print(f"[red]✗ Error: {e}[/red]")
        raise typer.Exit(code=1)

    console.print(f"[dim]{len(topic_corpus)} tweets, {len(users)} users, keywords {sorted(spec.keywords)}[/dim]")
    console.print(f"[green]✓ Saved to {path}[/green]")
