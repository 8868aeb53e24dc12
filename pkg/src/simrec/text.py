"""Text normalization for paper fields and journal scope descriptions.

The cleaning pipeline applies six rules in a fixed executable order:

1. lowercase
2. strip URLs (while they are still intact, before punctuation is gone)
3. replace punctuation and symbol characters with spaces
4. drop stop words (frozen standard English list plus a repo-local
   extension file)
5. collapse repeated whitespace
6. drop any token containing a non-alphabetic character

The result is a single-space-joined sequence of lowercase alphabetic
tokens; normalize_text is idempotent.
"""

from __future__ import annotations

import re
from functools import lru_cache
from importlib import resources
from pathlib import Path

_URL_RE = re.compile(r"https?://\S+|www\.\S+")
# \w keeps letters/digits/underscore; underscore is stripped explicitly.
_PUNCT_RE = re.compile(r"[^\w\s]|_")

_STOPWORDS_FILE = "stopwords_en.txt"
_EXTRA_FILE = "stopwords_extra.txt"


def _read_word_list(text: str) -> frozenset[str]:
    words = set()
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        words.add(line.lower())
    return frozenset(words)


@lru_cache(maxsize=None)
def _builtin_stopwords() -> frozenset[str]:
    base = resources.files("simrec.data")
    words = _read_word_list((base / _STOPWORDS_FILE).read_text(encoding="utf-8"))
    extra = _read_word_list((base / _EXTRA_FILE).read_text(encoding="utf-8"))
    return words | extra


@lru_cache(maxsize=8)
def _file_stopwords(path: str) -> frozenset[str]:
    return _read_word_list(Path(path).read_text(encoding="utf-8"))


def stopwords(extra_path: str | None = None) -> frozenset[str]:
    """The active stop-word set: builtin list plus an optional extra file."""
    words = _builtin_stopwords()
    if extra_path:
        words = words | _file_stopwords(str(extra_path))
    return words


def normalize_text(raw: str, extra_stopwords_path: str | None = None) -> str:
    """Apply the six cleaning rules to raw text. Empty output is legal."""
    text = raw.lower()
    text = _URL_RE.sub(" ", text)
    text = _PUNCT_RE.sub(" ", text)
    stops = stopwords(extra_stopwords_path)
    tokens = [t for t in text.split() if t not in stops and t.isalpha()]
    return " ".join(tokens)
