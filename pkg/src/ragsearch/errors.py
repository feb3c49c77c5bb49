"""Exception hierarchy. ``code`` is the machine-readable name used in HTTP error bodies."""


class RagSearchError(Exception):
    code = "internal"


class DuplicateExternalId(RagSearchError):
    code = "duplicate_external_id"


class FormatError(RagSearchError):
    """Index file is corrupt, truncated, or from an incompatible version."""

    code = "format_error"


class DomainError(RagSearchError, ValueError):
    code = "domain_error"


class UnknownDocument(RagSearchError, KeyError):
    code = "unknown_document"

    def __str__(self) -> str:
        return Exception.__str__(self)


class MissingMetric(RagSearchError):
    code = "missing_metric"


class EmptyQuery(RagSearchError):
    """The query analyzed to zero terms (e.g. only stopwords)."""

    code = "empty_query"


class EmptyRelevantSet(RagSearchError):
    code = "empty_relevant_set"


class MissingJudgment(RagSearchError):
    code = "missing_judgment"


class ParseError(RagSearchError):
    code = "parse_error"

    def __init__(self, message: str, path: str = "$"):
        super().__init__(f"{path}: {message}")
        self.path = path


class EmptyDataset(RagSearchError):
    code = "empty_dataset"
