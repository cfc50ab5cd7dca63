"""Errors raised by clusterd2d.

All of them subclass :class:`ValueError`, so code that only cares about invalid input can keep catching that.
"""

from __future__ import annotations

from typing import Literal, Optional

__all__ = ["ConfigError", "InfeasibleError", "NoProviderError", "UnstableQueueError"]


class NoProviderError(ValueError):
    """No content provider can exist, or providers are too rare to condition on."""


class UnstableQueueError(ValueError):
    """A queue violates its stability condition.

    Parameters
    ----------
    queue
        ``"d2d"`` for the multiclass D2D queue, ``"bs"`` for the base-station queue.
    load
        Traffic intensity of the D2D queue, or offered load ``eta * zeta_b`` of the BS queue.
    capacity
        The value ``load`` has to stay below.
    """

    def __init__(self, queue: Literal["d2d", "bs"], load: float, capacity: float) -> None:
        self.queue = queue
        self.load = load
        self.capacity = capacity
        super().__init__(f"The {queue} queue is unstable: load {load:.6g} is not below {capacity:.6g}.")


class InfeasibleError(ValueError):
    """No bandwidth split keeps both queues stable."""

    def __init__(self, message: str, deficit: float, constraint: str) -> None:
        self.deficit = deficit
        self.constraint = constraint
        super().__init__(f"{message} (constraint: {constraint}, capacity deficit: {deficit:.6g} Hz)")


class ConfigError(ValueError):
    """Schema violation in an experiment configuration file."""

    def __init__(self, message: str, field: Optional[str] = None, line: Optional[int] = None) -> None:
        self.field = field
        self.line = line
        location = f"line {line}: " if line is not None else ""
        super().__init__(f"{location}{message}")
