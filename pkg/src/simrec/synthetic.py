"""Synthetic separable corpus for desk-scale runs and the test suite.

Each journal gets a disjoint vocabulary of pseudo-words; its papers and
its scope text draw only from that vocabulary, so the journal is fully
identifiable from any content word. Generation is deterministic per seed.
"""

from __future__ import annotations

import random
from pathlib import Path

from .corpus import (
    JournalProfile,
    PaperRecord,
    journal_to_dict,
    paper_to_dict,
    write_jsonl,
)
from .text import stopwords

_CONSONANTS = "bcdfglmnprstvz"
_VOWELS = "aeiou"


def _make_words(rng: random.Random, count: int) -> list[str]:
    """Unique pronounceable pseudo-words, filtered against the stop list."""
    stops = stopwords()
    words: list[str] = []
    seen: set[str] = set()
    while len(words) < count:
        syllables = rng.randint(2, 3)
        word = "".join(
            rng.choice(_CONSONANTS) + rng.choice(_VOWELS) for _ in range(syllables)
        )
        if word in seen or word in stops:
            continue
        seen.add(word)
        words.append(word)
    return words


def make_synthetic_corpus(
    n_journals: int = 8,
    docs_per_journal: int = 25,
    vocab_per_journal: int = 30,
    seed: int = 7,
) -> tuple[list[PaperRecord], list[JournalProfile]]:
    """Generate (papers, journals) with disjoint per-journal vocabularies."""
    rng = random.Random(seed)
    all_words = _make_words(rng, n_journals * vocab_per_journal)

    journals: list[JournalProfile] = []
    papers: list[PaperRecord] = []
    for j in range(n_journals):
        vocab = all_words[j * vocab_per_journal:(j + 1) * vocab_per_journal]
        jid = f"J{j:02d}"
        scope_words = rng.sample(vocab, k=min(15, len(vocab)))
        journals.append(JournalProfile(
            journal_id=jid,
            name=f"Journal of {vocab[0].capitalize()} Studies",
            scope_text=" ".join(scope_words),
        ))
        for d in range(docs_per_journal):
            title = " ".join(rng.choices(vocab, k=rng.randint(4, 7)))
            abstract = " ".join(rng.choices(vocab, k=rng.randint(25, 40)))
            keywords = rng.sample(vocab, k=rng.randint(3, 5))
            papers.append(PaperRecord(
                id=f"{jid}-{d:03d}",
                title=title,
                abstract=abstract,
                keywords=tuple(keywords),
                journal_id=jid,
            ))
    return papers, journals


def write_synthetic_corpus(out_dir: str | Path, **kwargs) -> tuple[Path, Path]:
    """Write papers.jsonl and journals.jsonl for the synthetic corpus."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    papers, journals = make_synthetic_corpus(**kwargs)
    papers_path = out / "papers.jsonl"
    journals_path = out / "journals.jsonl"
    write_jsonl(papers_path, (paper_to_dict(p) for p in papers))
    write_jsonl(journals_path, (journal_to_dict(j) for j in journals))
    return papers_path, journals_path


if __name__ == "__main__":  # pragma: no cover
    import argparse

    parser = argparse.ArgumentParser(description="generate the synthetic demo corpus")
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("--journals", type=int, default=8)
    parser.add_argument("--docs-per-journal", type=int, default=25)
    parser.add_argument("--seed", type=int, default=7)
    args = parser.parse_args()
    paths = write_synthetic_corpus(
        args.out, n_journals=args.journals,
        docs_per_journal=args.docs_per_journal, seed=args.seed,
    )
    print(f"wrote {paths[0]} and {paths[1]}")
