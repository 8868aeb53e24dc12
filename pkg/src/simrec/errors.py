"""Exception types shared across the package.

Every domain error raised by the library derives from SimrecError so the
CLI can map any of them to a nonzero exit with the error name.
"""


class SimrecError(Exception):
    """Base class for all domain errors."""


class MalformedRecord(SimrecError):
    """A corpus file line violates the record schema."""

    def __init__(self, path, line_no: int, reason: str):
        self.path = str(path)
        self.line_no = line_no
        self.reason = reason
        super().__init__(f"{self.path}:{line_no}: {reason}")


class UnknownJournal(SimrecError):
    """A paper references a journal_id missing from the journal table."""

    def __init__(self, journal_id: str, paper_id: str | None = None):
        self.journal_id = journal_id
        self.paper_id = paper_id
        where = f" (paper {paper_id})" if paper_id else ""
        super().__init__(f"unknown journal {journal_id!r}{where}")


class AllFieldsEmpty(SimrecError):
    """Every selected paper field normalized to the empty string."""


class ZeroNormVector(SimrecError):
    """A vector with norm below epsilon was fed to cosine similarity."""

    def __init__(self, message: str = "vector norm below epsilon", index: int | None = None):
        self.index = index
        if index is not None:
            message = f"{message} (row {index})"
        super().__init__(message)


class DimensionMismatch(SimrecError):
    """Tensor or vocabulary dimensions are inconsistent."""


class ManifestMismatch(SimrecError):
    """A saved artifact's manifest disagrees with its contents."""


class NonFiniteLoss(SimrecError):
    """Training produced a NaN or infinite loss."""

    def __init__(self, step: int, value: float, context: str = ""):
        self.step = step
        self.value = value
        suffix = f" [{context}]" if context else ""
        super().__init__(f"non-finite loss {value!r} at step {step}{suffix}")


class ComboJournalMismatch(SimrecError):
    """The training journal table differs from the one the encoder recorded."""


class LengthMismatch(SimrecError):
    """Paired sequences have different lengths."""


class DegenerateBatch(UserWarning):
    """Warning: batch size 1 makes the contrastive loss identically zero."""
