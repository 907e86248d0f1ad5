from __future__ import annotations

import traceback
from datetime import datetime
from pathlib import Path
from typing import Optional

from rich.console import Console

from waning_interest.paths import log_dir, timestamp_slug, workspace_root


# ----------------------------
# Simple run logger
# ----------------------------
class RunLogger:
    """Timestamped per-run log file, optionally echoed to the console."""

    def __init__(self, log_path: Path, echo: bool = True, console: Optional[Console] = None):
        self.log_path = log_path
        self._fh = log_path.open("w", encoding="utf-8")
        self.echo = echo
        self.console = console or Console()

    def __enter__(self) -> "RunLogger":
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    def close(self):
        try:
            self._fh.close()
        except Exception:
            pass

    def log(self, msg: str = "", style: Optional[str] = None):
        ts = datetime.now().strftime("%Y-%m-%d %H:%M:%S")
        self._fh.write(f"[{ts}] {msg}\n")
        self._fh.flush()
        if self.echo:
            self.console.print(msg, style=style, markup=False, highlight=False)

    def detail(self, msg: str):
        """Log-file only."""
        ts = datetime.now().strftime("%Y-%m-%d %H:%M:%S")
        self._fh.write(f"[{ts}] {msg}\n")
        self._fh.flush()

    def exception(self, context: str):
        self.log(f"ERROR: {context}", style="red")
        self.detail(traceback.format_exc())


def create_run_log(command: str, echo: bool = True, console: Optional[Console] = None) -> RunLogger:
    stem = f"run_{timestamp_slug()}_{command}"
    path = log_dir() / f"{stem}.txt"
    i = 2
    while path.exists():
        path = log_dir() / f"{stem}__{i}.txt"
        i += 1
    logger = RunLogger(log_path=path, echo=echo, console=console)
    logger.detail(f"Log file: {path}")
    logger.detail(f"Workspace root: {workspace_root()}")
    logger.detail(f"CWD: {Path.cwd().resolve()}")
    return logger
