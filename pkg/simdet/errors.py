from __future__ import annotations

from pathlib import Path


class SimDetError(Exception):
    def __init__(self, error: str, source: Path | str | None = None):
        super().__init__(error)
        self.source = source

    def __str__(self):
        error_msg = super().__str__()
        if self.source is None:
            return error_msg
        return f"({self.source}): {error_msg}"


class ShapeError(SimDetError, ValueError):
    pass


class ConfigError(SimDetError, ValueError):
    def __init__(self, error: str, source: Path | str | None = None,
                 messages: list[tuple[int, str]] | None = None):
        super().__init__(error, source)
        # (line number, message) pairs collected from the validators
        self.messages = messages or []


class DatasetError(SimDetError, ValueError):
    pass


class CheckpointError(SimDetError):
    pass


class ConvergenceError(SimDetError):
    pass
