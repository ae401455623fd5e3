"""Exception hierarchy shared across the package."""

from __future__ import annotations


class TsqaError(Exception):
    """Base class for every error raised by tsqa."""


class DataError(TsqaError):
    """Market data could not be loaded or is invalid."""


class IngestError(DataError):
    def __init__(self, message: str, line: int | None = None) -> None:
        self.line = line
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(prefix + message)


class GapError(IngestError):
    def __init__(self, missing: list[int], line: int | None = None) -> None:
        self.missing = missing
        shown = ", ".join(str(t) for t in missing[:5])
        more = f" (+{len(missing) - 5} more)" if len(missing) > 5 else ""
        super().__init__(f"gap in series, missing timestamps: {shown}{more}", line)


class UnknownInstrumentError(DataError, KeyError):
    def __init__(self, key: object, known: list[str]) -> None:
        self.key = key
        self.known = known
        super().__init__(f"unknown instrument {key}; known: {', '.join(known) or '(none)'}")

    def __str__(self) -> str:
        return self.args[0]


class ToolError(TsqaError):
    """A grounding tool could not produce a result for its inputs."""


class InsufficientDataError(ToolError):
    pass


class ZeroVarianceError(ToolError):
    pass


class AlignmentError(ToolError):
    pass


class UnknownUnitError(ToolError, ValueError):
    pass


class RegistryError(TsqaError):
    """A tool call does not fit the registered schemas."""


class UnknownToolError(RegistryError):
    def __init__(self, name: str, known: list[str]) -> None:
        self.name = name
        super().__init__(f"unknown tool {name!r}; registered: {', '.join(known)}")


class ParameterError(RegistryError):
    pass


class StubError(TsqaError):
    pass


class UnknownItemError(StubError, KeyError):
    def __str__(self) -> str:
        return self.args[0]


class BackendTransportError(TsqaError):
    """The language-model backend could not be reached after retries."""


class BenchmarkFormatError(TsqaError):
    def __init__(self, message: str, line: int | None = None, column: str | None = None) -> None:
        self.line = line
        self.column = column
        where = []
        if line is not None:
            where.append(f"line {line}")
        if column is not None:
            where.append(f"column {column!r}")
        prefix = (", ".join(where) + ": ") if where else ""
        super().__init__(prefix + message)
