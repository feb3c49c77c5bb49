"""Text normalization shared by documents and queries.

The pipeline is fixed: strip HTML tags, split into runs of letters and
digits, lowercase, drop stopwords. No stemming.
"""

from __future__ import annotations

import html
import re
from dataclasses import dataclass, field
from pathlib import Path

# Classic English function words. Kept short on purpose; a custom list can be
# loaded with load_stopwords().
DEFAULT_STOPWORDS: frozenset[str] = frozenset({
    "a", "an", "and", "are", "as", "at", "be", "but", "by", "for",
    "if", "in", "into", "is", "it", "its", "no", "not", "of", "on",
    "or", "such", "that", "the", "their", "then", "there", "these",
    "they", "this", "to", "was", "were", "will", "with", "which",
    "what", "who", "how", "when", "where", "from", "has", "had",
})

TOKEN_PATTERN = "unicode-alnum"

_TAG_RE = re.compile(r"<[^>]*>")
# \w minus underscore: letters and digits in any script
_TOKEN_RE = re.compile(r"[^\W_]+")


@dataclass(frozen=True)
class AnalyzerConfig:
    lowercase: bool = True
    strip_html: bool = True
    stopwords: frozenset[str] = field(default=DEFAULT_STOPWORDS)
    token_pattern: str = TOKEN_PATTERN

    def __post_init__(self) -> None:
        if self.token_pattern != TOKEN_PATTERN:
            raise ValueError(f"unsupported token_pattern: {self.token_pattern!r}")
        # stopwords are matched after case folding
        object.__setattr__(
            self, "stopwords", frozenset(w.lower() for w in self.stopwords)
        )

    def to_dict(self) -> dict:
        return {
            "lowercase": self.lowercase,
            "strip_html": self.strip_html,
            "stopwords": sorted(self.stopwords),
            "token_pattern": self.token_pattern,
        }

    @classmethod
    def from_dict(cls, data: dict) -> AnalyzerConfig:
        return cls(
            lowercase=bool(data["lowercase"]),
            strip_html=bool(data["strip_html"]),
            stopwords=frozenset(data["stopwords"]),
            token_pattern=data["token_pattern"],
        )


def strip_html(raw: str) -> str:
    """Replace every ``<...>`` span with a space and decode character entities.

    An unclosed ``<`` with no later ``>`` is left as-is.
    """
    return html.unescape(_TAG_RE.sub(" ", raw))


def tokenize(text: str) -> list[str]:
    return _TOKEN_RE.findall(text)


def analyze(raw: str, config: AnalyzerConfig) -> list[str]:
    """Run the analysis pipeline and return terms in their original order.

    Duplicates are kept; callers that need frequencies count them.
    """
    if config.strip_html:
        raw = strip_html(raw)
    tokens = tokenize(raw)
    if config.lowercase:
        lowered = []
        for t in tokens:
            low = t.lower()
            if low.isalnum():
                lowered.append(low)
            else:
                # U+0130 lowercases to "i" + combining dot; keep token boundaries
                lowered.extend(_TOKEN_RE.findall(low))
        tokens = lowered
    stop = config.stopwords
    return [t for t in tokens if t not in stop]


def load_stopwords(path: str | Path) -> frozenset[str]:
    """Read a one-term-per-line stopword file. ``#`` lines are comments."""
    words = set()
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            words.add(line.lower())
    return frozenset(words)
