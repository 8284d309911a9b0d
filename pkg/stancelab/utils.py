"""
Stancelab - Utilities
Logging setup, atomic file output and seed derivation shared by all stages
"""

import logging
import os
import tempfile
import zlib
from contextlib import contextmanager
from pathlib import Path
from typing import Iterator, Optional, Union

from rich.console import Console
from rich.logging import RichHandler

console = Console()

MASK64 = (1 << 64) - 1


def stancelab_home() -> Path:
    """Directory for logs and user-level state ($STANCELAB_HOME or ~/.stancelab)."""
    return Path(os.getenv("STANCELAB_HOME", str(Path.home() / ".stancelab")))


def setup_logging(debug: bool = False, log_file: Optional[Path] = None) -> logging.Logger:
    """Sets up logging to file and console.
    Args:
        debug: If True, log debug messages to console.
        log_file: Explicit log file. Defaults to $STANCELAB_HOME/debug.log.
    Returns:
        The configured "stancelab" logger.
    """
    logger = logging.getLogger("stancelab")
    logger.setLevel(logging.DEBUG)

    # Avoid duplicate handlers
    logger.handlers.clear()

    console_handler = RichHandler(console=Console(stderr=True), show_path=False)
    console_handler.setLevel(logging.DEBUG if debug else logging.INFO)
    console_handler.setFormatter(logging.Formatter("%(message)s"))
    logger.addHandler(console_handler)

    # File handler (always log DEBUG)
    try:
        if log_file is None:
            log_dir = stancelab_home()
            log_dir.mkdir(parents=True, exist_ok=True)
            log_file = log_dir / "debug.log"
        file_handler = logging.FileHandler(log_file, encoding="utf-8")
        file_handler.setLevel(logging.DEBUG)
        file_handler.setFormatter(logging.Formatter("%(asctime)s - %(levelname)s - %(message)s"))
        logger.addHandler(file_handler)
    except OSError as e:
        logger.debug(f"File logging disabled: {e}")

    logger.propagate = False
    return logger


@contextmanager
def atomic_path(path: Union[str, Path]) -> Iterator[Path]:
    """Yield a temporary sibling path that replaces ``path`` on success.

    Readers never observe a truncated file: the final name appears only
    after the writer finished, via os.replace.
    """
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(prefix=f".{target.name}.", suffix=".tmp", dir=target.parent)
    os.close(fd)
    tmp = Path(tmp_name)
    try:
        yield tmp
        os.replace(tmp, target)
    finally:
        if tmp.exists():
            tmp.unlink()


def atomic_write_text(path: Union[str, Path], text: str) -> Path:
    """Write UTF-8 text atomically (temp + rename)."""
    with atomic_path(path) as tmp:
        tmp.write_text(text, encoding="utf-8")
    return Path(path)


def atomic_write_bytes(path: Union[str, Path], data: bytes) -> Path:
    """Write bytes atomically (temp + rename)."""
    with atomic_path(path) as tmp:
        tmp.write_bytes(data)
    return Path(path)


def splitmix64(state: int) -> int:
    """One splitmix64 output for ``state``."""
    z = (state + 0x9E3779B97F4A7C15) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def derive_seed(master: int, *labels: Union[str, int]) -> int:
    """Derive a per-stage 64-bit seed from the master seed.

    Each label (stage name, topic name, trial index) is folded in as
    ``state = splitmix64(state ^ crc32(label))``, so seeds depend only on
    the master seed and the label path, never on scheduling order.

    Args:
        master: Master seed from the configuration.
        labels: Path of labels identifying the consumer.
    Returns:
        Seed in [0, 2**64).
    """
    state = splitmix64(master & MASK64)
    for label in labels:
        state = splitmix64(state ^ zlib.crc32(str(label).encode("utf-8")))
    return state
