from __future__ import annotations

import logging

import pytest
from clusterd2d._logging import LOGGER_NAME, _level_from_env, logger


@pytest.mark.parametrize(("value", "expected"), [("DEBUG", logging.DEBUG), ("warning", logging.WARNING), ("30", 30)])
def test_level_from_env(monkeypatch: pytest.MonkeyPatch, value: str, expected: int) -> None:
    monkeypatch.setenv("LOGLEVEL", value)
    assert _level_from_env() == expected


def test_unknown_level_falls_back(monkeypatch: pytest.MonkeyPatch) -> None:
    monkeypatch.setenv("LOGLEVEL", "chatty")
    assert _level_from_env() == logging.INFO
    monkeypatch.delenv("LOGLEVEL")
    assert _level_from_env(logging.ERROR) == logging.ERROR


def test_package_logger() -> None:
    assert logger.name == LOGGER_NAME
    assert not logger.propagate
    assert len(logger.handlers) == 1
