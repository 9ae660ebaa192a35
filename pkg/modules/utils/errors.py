"""
Error hierarchy shared by every sub-package.

Each error carries the process exit code the command line reports for it.
"""


class MemSeConvError(Exception):
    exit_code = 1


class ConfigError(MemSeConvError, ValueError):
    """Invalid configuration, flag combination or stage plan."""
    exit_code = 2


class DataFormatError(MemSeConvError, ValueError):
    exit_code = 3


class PgmFormatError(DataFormatError):
    """Malformed PGM stream. ``offset`` is the byte offset where parsing failed."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at byte offset {offset})")
        self.offset = offset


class UnsupportedFormatError(DataFormatError):
    pass


class WeightFileError(DataFormatError):
    pass


class ShapeError(WeightFileError):
    pass


class DomainError(WeightFileError):
    pass


class IOFailure(MemSeConvError):
    exit_code = 4

    def __init__(self, message: str, path: str):
        super().__init__(f"{message}: {path}")
        self.path = path


class CircuitContractError(MemSeConvError, RuntimeError):
    """A block received a signal its upstream wiring guarantees it never sees."""
    exit_code = 5
