"""
Stancelab - Eval Command
Majority labels, precision/recall/F1 and overlap with propagated labels
"""

from pathlib import Path
from typing import Optional

import typer
from rich.console import Console
from rich.table import Table

from ..core.cluster import load_assignment
from ..core.errors import StancelabError
from ..core.evaluate import label_overlap, load_gold, majority_label, predicted_classes, prf
from ..core.pipeline import write_json
from .options import DETERMINISTIC_OPTION, SEED_OPTION, log_run_flags

console = Console()


def eval_cmd(
    clusters: Path = typer.Option(..., "--clusters", help="Cluster CSV user_id,cluster"),
    gold: Path = typer.Option(..., "--gold", help="Gold CSV user_id,label"),
    labels: Optional[Path] = typer.Option(None, "--labels", help="Propagated labels CSV for the overlap table"),
    out: Path = typer.Option(Path("stancelab-out"), "--out", help="Output directory"),
    seed: int = SEED_OPTION,
    deterministic: bool = DETERMINISTIC_OPTION,
):
    """Score clusters against gold labels"""
    console.print("[bold cyan]📊 Evaluate[/bold cyan]")
    log_run_flags("eval", seed, deterministic)

    try:
        assignment = load_assignment(clusters)
        gold_labels = load_gold(gold)
        majority = majority_label(assignment, gold_labels)
        predicted = predicted_classes(assignment, majority)
        report = prf(predicted, gold_labels)
        payload = {
            "majority": {str(c): m._asdict() for c, m in sorted(majority.items())},
            "metrics": report.to_dict(),
        }
        if labels is not None:
            reference = {u: v for u, v in load_gold(labels).items() if v in ("pro", "anti") and u in predicted}
            payload["overlap"] = label_overlap(predicted, reference, ["pro", "anti"])
        write_json(out / "eval.json", payload)
    except (StancelabError, OSError) as e:
        console.print(f"[red]✗ Error: {e}[/red]")
        raise typer.Exit(code=1)

    table = Table(title="Per-class metrics")
    table.add_column("Class", style="cyan")
    for name in ("Precision", "Recall", "F1", "Support"):
        table.add_column(name, justify="right")
    for cls, m in sorted(report.per_class.items()):
        table.add_row(cls, f"{m.precision:.3f}", f"{m.recall:.3f}", f"{m.f1:.3f}", str(m.support))
    table.add_row("macro", f"{report.macro_precision:.3f}", f"{report.macro_recall:.3f}", f"{report.macro_f1:.3f}", str(report.n_users))
    console.print(table)
    console.print(f"[green]✓ Saved to {out / 'eval.json'}[/green]")
