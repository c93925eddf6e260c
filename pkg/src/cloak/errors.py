"""Exception types shared across the toolchain."""

from __future__ import annotations


class SourceError(Exception):
    """Error anchored to a position in a source file.

    Rendered as ``file:line:col: message`` so editors can jump to it.
    """

    def __init__(self, message: str, line: int, col: int, path: str = "<input>"):
        super().__init__(message)
        self.message = message
        self.line = line
        self.col = col
        self.path = path

    def __str__(self) -> str:
        return f"{self.path}:{self.line}:{self.col}: {self.message}"


class LexError(SourceError):
    pass


class ParseError(SourceError):
    pass


class CheckError(SourceError):
    """Base for errors raised while checking a parsed contract."""


class TypeMismatchError(CheckError):
    """Data types do not line up (bad operand, bad index, unknown name)."""


class PrivacyViolation(CheckError):
    """An assignment or expression would leak data across owners."""


class ExecAbort(Exception):
    """Execution aborted; the caller must discard any partial state.

    ``reason`` is one of REQUIRE_FAILED, OVERFLOW, STEP_BUDGET, TYPE_MISMATCH.
    """

    REQUIRE_FAILED = "RequireFailed"
    OVERFLOW = "Overflow"
    STEP_BUDGET = "StepBudgetExceeded"
    TYPE_MISMATCH = "TypeMismatch"

    def __init__(self, reason: str, detail: str = ""):
        super().__init__(f"{reason}: {detail}" if detail else reason)
        self.reason = reason
        self.detail = detail


class PolicyError(Exception):
    """Output partitioning hit data with no deliverable owner."""


class CryptoError(Exception):
    """Decryption or signature verification failed."""


class Revert(Exception):
    """An on-chain operation rejected the transaction; no state changed."""

    def __init__(self, reason: str):
        super().__init__(reason)
        self.reason = reason


class EnclaveError(Exception):
    """The enclave refused an operation (bad binding, bad proof, bad call)."""

    def __init__(self, reason: str, detail: str = ""):
        super().__init__(f"{reason}: {detail}" if detail else reason)
        self.reason = reason
        self.detail = detail


class ConfigError(Exception):
    """A scenario or command line configuration is unusable."""
