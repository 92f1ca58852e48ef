"""Exception types raised across the package."""

from __future__ import annotations


class NetmapError(Exception):
    """Base class for all package errors."""


class InputFormatError(NetmapError, ValueError):
    """A record in an input file could not be parsed."""

    def __init__(self, message: str, line: int | None = None, source: str | None = None):
        self.line = line
        self.source = source
        where = ""
        if source is not None:
            where += f"{source}:"
        if line is not None:
            where += f"line {line}: "
        elif where:
            where += " "
        super().__init__(where + message)


class MissingNodesError(NetmapError, KeyError):
    def __init__(self, missing):
        self.missing = sorted(missing)
        super().__init__(f"accounts not in graph: {', '.join(self.missing)}")

    def __str__(self) -> str:
        return self.args[0]


class AssignmentError(NetmapError, ValueError):
    """Segment-to-group assignment is incomplete or inconsistent."""

    def __init__(self, missing=(), duplicate=(), unknown=()):
        self.missing = sorted(missing)
        self.duplicate = sorted(duplicate)
        self.unknown = sorted(unknown)
        parts = []
        if self.missing:
            parts.append("unassigned segment ids: " + ", ".join(map(str, self.missing)))
        if self.duplicate:
            parts.append("segment ids assigned more than once: " + ", ".join(map(str, self.duplicate)))
        if self.unknown:
            parts.append("unknown segment ids: " + ", ".join(map(str, self.unknown)))
        super().__init__("; ".join(parts))


class DomainError(NetmapError, ValueError):
    """A URL or host name has no usable registrable domain."""

    def __init__(self, raw: str, reason: str):
        self.raw = raw
        self.reason = reason
        super().__init__(f"cannot normalize {raw!r}: {reason}")


class ConfigError(NetmapError):
    """Configuration failed validation; ``errors`` lists every problem found."""

    def __init__(self, errors: list[str]):
        self.errors = list(errors)
        super().__init__("\n".join(self.errors))


class StageError(NetmapError):
    def __init__(self, stage: str, cause: BaseException):
        self.stage = stage
        self.cause = cause
        super().__init__(f"stage {stage!r} failed: {type(cause).__name__}: {cause}")
