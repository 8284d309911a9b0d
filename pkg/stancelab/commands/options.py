"""
Stancelab - Common Options
Flags shared by every subcommand
"""

import logging

import typer

logger = logging.getLogger(__name__)

DEFAULT_SEED = 7

SEED_OPTION = typer.Option(DEFAULT_SEED, "--seed", help="Master seed")
DETERMINISTIC_OPTION = typer.Option(
    True, "--deterministic/--parallel", help="Single-threaded, byte-reproducible run"
)


def log_run_flags(command: str, seed: int, deterministic: bool) -> None:
    logger.debug(f"{command}: seed={seed} deterministic={deterministic}")
