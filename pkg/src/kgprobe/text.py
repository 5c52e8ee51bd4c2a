"""Text normalization shared by ranking, metrics, and the fallback embedder."""

from __future__ import annotations

import re
import string

_PUNCT_TABLE = str.maketrans({c: " " for c in string.punctuation})
_WS = re.compile(r"\s+")

# Small shipped English stopword list. Deliberately excludes role-cue words
# such as "via"; relation-cue matching bypasses stopword filtering anyway.
DEFAULT_STOPWORDS = frozenset(
    """
    a about above after again against all also am an and any are as at be
    because been before being below between both but by can cannot could did
    do does doing down during each few for from further had has have having
    he her here hers herself him himself his how i if in into is it its
    itself just me more most my myself no nor not now of off on once only or
    other our ours ourselves out over own same she should so some such than
    that the their theirs them themselves then there these they this those
    to too under until up very was we were what when where which while who
    whom why will with would you your yours yourself yourselves
    """.split()
)


def normalize_phrase(text: str) -> str:
    """Lowercase, map punctuation (incl. hyphens) to spaces, collapse whitespace.

    Used for whole-phrase containment tests so that "SEI-layer" and
    "sei layer" compare equal.
    """
    return _WS.sub(" ", text.lower().translate(_PUNCT_TABLE)).strip()


def content_words(text: str, stopwords: frozenset[str] | None = None) -> list[str]:
    """Normalized content words in order, duplicates kept.

    Lowercases, strips punctuation to whitespace, drops stopwords and tokens
    shorter than 2 characters.
    """
    if stopwords is None:
        stopwords = DEFAULT_STOPWORDS
    return [
        tok
        for tok in normalize_phrase(text).split()
        if len(tok) >= 2 and tok not in stopwords
    ]


def normalize_terms(text: str, stopwords: frozenset[str] | None = None) -> set[str]:
    """Set of normalized content words (see :func:`content_words`)."""
    return set(content_words(text, stopwords))
