import pytest

from waning_interest.model import ModelParams

ENV_VARS = ("WANING_SEED", "WANING_LOG_BINS", "WANING_MC_REPS", "WANING_MC_WORKERS")


@pytest.fixture(autouse=True)
def workspace(tmp_path, monkeypatch):
    """Every test gets its own workspace and a clean WANING_* environment."""
    home = tmp_path / "ws"
    monkeypatch.setenv("WANING_HOME", str(home))
    for name in ENV_VARS:
        # set-then-delete so values loaded from a .env during the test are undone too
        monkeypatch.setenv(name, "")
        monkeypatch.delenv(name)
    return home


@pytest.fixture
def cutoff_params():
    return ModelParams(alpha=1.0, beta=0.1, b=0.2)
