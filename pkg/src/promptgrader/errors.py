"""Exception hierarchy shared across the package."""

from __future__ import annotations


class PromptGraderError(Exception):
    """Base class for all errors raised by this package."""


# --- task bank ---


class ParseError(PromptGraderError):
    """A file could not be parsed; message carries file and line context."""


class DuplicateId(PromptGraderError):
    """Two tasks in one bank share an id."""


class SchemaViolation(PromptGraderError):
    """A task violates one of its declared invariants; message names it."""


class MultipleFunctions(PromptGraderError):
    """Source listing contains more than one top-level function."""


class UnparseableSource(PromptGraderError):
    """Source listing is not a single well-formed function definition."""


# --- gateway ---


class EmptyPrompt(PromptGraderError):
    """Student prompt is empty after whitespace normalization."""


class ProviderTimeout(PromptGraderError):
    """Provider did not answer within the configured timeout."""


class ProviderError(PromptGraderError):
    """Provider answered with a non-success status; body is captured."""

    def __init__(self, message: str, status: int | None = None, body: str = ""):
        super().__init__(message)
        self.status = status
        self.body = body


class MockMiss(PromptGraderError):
    """Replay store has no recording for this envelope."""


class NoCodeFound(PromptGraderError):
    """No extraction strategy produced syntax-valid code."""


# --- sandbox ---


class CompileError(PromptGraderError):
    """Submitted program failed the syntax check."""

    def __init__(self, diagnostics: str):
        super().__init__(diagnostics)
        self.diagnostics = diagnostics


class SignatureMismatch(PromptGraderError):
    """Program does not define the contracted function name/arity."""


class SandboxUnavailable(PromptGraderError):
    """Sandbox infrastructure failure (not a program verdict)."""


# --- grading engine ---


class UnknownTask(PromptGraderError):
    """No task with the given id in the loaded bank."""


class UnknownTranscript(PromptGraderError):
    """No stored transcript with the given id."""


class SequenceConflict(PromptGraderError):
    """Attempt sequence assignment conflicted with the store state."""


class StorageError(PromptGraderError):
    """Persistent store is corrupt or unwritable."""


# --- analytics ---


class UnknownLikertLabel(ParseError):
    """Survey row carries a label outside the five-step scale."""


class EmptyGroup(PromptGraderError):
    """A difficulty group has no measurable pairs; metrics are absent."""
