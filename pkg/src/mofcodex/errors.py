"""Exception hierarchy shared across the toolkit.

Kept in one module so the HTTP service can map error classes to status
codes without importing every subsystem.
"""


class CodexError(Exception):
    """Base class for all toolkit errors."""


# -- schema ------------------------------------------------------------

class UnknownEntityType(CodexError):
    """Label does not resolve to any entity type or alias."""


class UnknownRelationType(CodexError):
    """Label does not resolve to a relation type."""


class RelationValidationError(CodexError):
    """Base for relation edge rejections."""


class DanglingSpanReference(RelationValidationError):
    """Edge references a span id absent from the span table."""


class TypeConstraintViolation(RelationValidationError):
    """Head/tail entity types are not permitted for the relation type."""


class SelfLoop(RelationValidationError):
    """Edge head and tail are the same span."""


# -- corpus ------------------------------------------------------------

class MalformedDoi(CodexError):
    """Input cannot be normalized into a DOI."""


class ArticleFormatError(CodexError):
    """Article file lacks a usable front-matter header."""


class FileUnreadable(CodexError):
    """A required input file cannot be opened or decoded."""


# -- classify / external model -----------------------------------------

class TransportError(CodexError):
    """External completion endpoint unreachable or timed out."""


class MalformedCompletion(CodexError):
    """Completion text violates the documented completion grammar."""


# -- extract -----------------------------------------------------------

class UnparseableQuantity(CodexError):
    """Text is neither a number+unit expression nor a known qualitative tag."""


# -- link --------------------------------------------------------------

class EmptyRecord(CodexError):
    """No synthesis-action spans: a record cannot be built."""


# -- store -------------------------------------------------------------

class ValidationFailed(CodexError):
    """Record rejected before persistence; message lists the problems."""


class StorageError(CodexError):
    """I/O failure or corrupt journal beyond the recoverable tail."""


class StoreLocked(CodexError):
    """Another writer holds the store's advisory lock."""


# -- evaluate ----------------------------------------------------------

class KeyMismatch(CodexError):
    """Predicted and gold stores do not cover the same paragraph keys."""
