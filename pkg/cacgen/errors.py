"""
Exception hierarchy for cacgen.

Library code raises these; the CLI catches them, logs the failure and
turns it into a nonzero exit code.
"""


class CacgenError(Exception):
    """Root of every error raised by cacgen."""


class ContractViolation(CacgenError, ValueError):
    """A precondition of an operation does not hold (shapes, ranges, spans)."""


class VocabularyError(CacgenError, KeyError):
    """A word is missing from the vocabulary or the vocabulary is malformed."""

    def __str__(self) -> str:
        # KeyError quotes its argument; keep the message readable
        return str(self.args[0]) if self.args else "vocabulary error"


class SceneSchemaError(CacgenError):
    """A scene, ground-truth or manifest file does not match its schema."""


class LayoutError(CacgenError):
    """A layout cannot be built (degenerate box, infeasible margin, unknown class)."""


class EvaluationError(CacgenError):
    """An evaluation cannot be computed from the given inputs."""


class InvariantViolation(CacgenError):
    """A finished run breaks a property it must hold (attention leak, ablation direction)."""


def require(condition: bool, message: str) -> None:
    """Raise ContractViolation with ``message`` unless ``condition`` holds."""
    if not condition:
        raise ContractViolation(message)
