import pytest


@pytest.fixture(autouse=True)
def _pin_probe_budget(monkeypatch):
    # keep probe schedules at their documented defaults regardless of the
    # caller's environment
    monkeypatch.delenv("ERGOKIT_BUDGET", raising=False)
