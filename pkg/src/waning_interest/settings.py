from __future__ import annotations

import os
from dataclasses import dataclass
from pathlib import Path

from dotenv import load_dotenv

from waning_interest.errors import ConfigurationError
from waning_interest.paths import env_file, workspace_root


def _env_int(name: str, default: int, minimum: int = 0) -> int:
    raw = os.environ.get(name)
    if raw is None or raw.strip() == "":
        return default
    try:
        value = int(raw.strip())
    except ValueError:
        raise ConfigurationError(f"{name} must be an integer, got {raw!r}") from None
    if value < minimum:
        raise ConfigurationError(f"{name} must be >= {minimum}, got {value}")
    return value


@dataclass(frozen=True)
class Settings:
    workspace: Path
    seed: int
    log_bins: int
    mc_reps: int
    mc_workers: int

    @classmethod
    def from_env(cls) -> "Settings":
        """Read WANING_* variables, after loading <workspace>/.env (real env vars win)."""
        path = env_file()
        if path.is_file():
            load_dotenv(path, override=False)
        seed = _env_int("WANING_SEED", 0)
        if seed >= 2**64:
            raise ConfigurationError("WANING_SEED must fit in 64 bits")
        return cls(
            workspace=workspace_root(),
            seed=seed,
            log_bins=_env_int("WANING_LOG_BINS", 25, minimum=1),
            mc_reps=_env_int("WANING_MC_REPS", 100_000, minimum=1),
            mc_workers=_env_int("WANING_MC_WORKERS", 1, minimum=1),
        )
