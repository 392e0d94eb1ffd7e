"""Diagnostics shared across the toolchain."""


class SynkitError(Exception):
    """Base class for all user-facing errors."""


class LexError(SynkitError):
    def __init__(self, msg: str, line: int, col: int):
        super().__init__(f"{line}:{col}: lexical error: {msg}")
        self.line, self.col = line, col


class ParseError(SynkitError):
    def __init__(self, msg: str, line: int = 0, col: int = 0):
        loc = f"{line}:{col}: " if line else ""
        super().__init__(f"{loc}syntax error: {msg}")
        self.line, self.col = line, col


class TypeError_(SynkitError):
    """Type or name-resolution error (kept distinct from builtins.TypeError)."""


class ElaborationError(SynkitError):
    """Causality cycle, missing equation, bad composition and the like."""


class SimulationError(SynkitError):
    """Runtime evaluation failure; carries the round index when known."""

    def __init__(self, msg: str, round_index: int | None = None):
        if round_index is not None:
            msg = f"round {round_index}: {msg}"
        super().__init__(msg)
        self.round_index = round_index


class SolverError(SynkitError):
    """External solver crash, timeout or malformed output."""


class EncodingError(SynkitError):
    """Formula outside the supported linear fragment."""


class ProofError(SynkitError):
    """Malformed proof script or rule application."""
