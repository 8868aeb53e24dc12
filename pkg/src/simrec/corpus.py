"""Corpus ingestion: paper/journal records, feature combos, splits, pairs.

File formats (all UTF-8, one JSON object per line):
  papers:   {"id", "title", "abstract", "keywords": [...], "journal_id"}
  journals: {"journal_id", "name", "scope_text"}
  split:    {"id", "split": "train"|"test"}   (optional; unlisted ids -> test)
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from .errors import AllFieldsEmpty, MalformedRecord, UnknownJournal
from .text import normalize_text

PAPER_FEATURES = ("T", "A", "K")

# Report row order used by the published comparison table.
COMBO_ORDER = [
    "T", "TS", "K", "KS", "A", "AS", "TK", "TKS",
    "TA", "TAS", "AK", "AKS", "TAK", "TAKS",
]


@dataclass(frozen=True)
class PaperRecord:
    """One submission: text fields plus its true journal label."""

    id: str
    title: str
    abstract: str
    keywords: tuple[str, ...]
    journal_id: str


@dataclass(frozen=True)
class JournalProfile:
    """A journal and its aims-and-scopes description."""

    journal_id: str
    name: str
    scope_text: str


@dataclass(frozen=True)
class FeatureCombo:
    """Which paper fields feed the model, and whether the scopes branch is on.

    There are exactly 14 valid values: 7 non-empty subsets of {T, A, K},
    each with use_scopes on or off.
    """

    paper_features: frozenset[str]
    use_scopes: bool = False

    def __post_init__(self):
        feats = frozenset(self.paper_features)
        if not feats:
            raise ValueError("combo must select at least one paper feature")
        bad = feats - set(PAPER_FEATURES)
        if bad:
            raise ValueError(f"unknown paper features: {sorted(bad)}")
        object.__setattr__(self, "paper_features", feats)

    @property
    def code(self) -> str:
        letters = "".join(f for f in PAPER_FEATURES if f in self.paper_features)
        return letters + ("S" if self.use_scopes else "")

    @classmethod
    def parse(cls, code: str) -> "FeatureCombo":
        cleaned = code.strip().upper()
        if not cleaned:
            raise ValueError("empty combo code")
        seen: set[str] = set()
        use_scopes = False
        for ch in cleaned:
            if ch == "S":
                if use_scopes:
                    raise ValueError(f"duplicate letter in combo code {code!r}")
                use_scopes = True
            elif ch in PAPER_FEATURES:
                if ch in seen:
                    raise ValueError(f"duplicate letter in combo code {code!r}")
                seen.add(ch)
            else:
                raise ValueError(f"invalid combo code {code!r}")
        return cls(paper_features=frozenset(seen), use_scopes=use_scopes)

    def __str__(self) -> str:  # pragma: no cover - convenience
        return self.code


def all_combos() -> list[FeatureCombo]:
    """The 14 valid combos, in canonical report order."""
    return [FeatureCombo.parse(code) for code in COMBO_ORDER]


@dataclass
class PairDataset:
    """Paired (paper text, journal scope text) samples for contrastive tuning."""

    pairs: list[tuple[str, str]]
    skipped: int = 0

    def __len__(self) -> int:
        return len(self.pairs)


@dataclass
class CorpusSplit:
    """Loaded corpus: disjoint train/test records plus the journal table."""

    train: list[PaperRecord]
    test: list[PaperRecord]
    journals: list[JournalProfile]
    _by_id: dict[str, JournalProfile] = field(init=False, repr=False)

    def __post_init__(self):
        self._by_id = {j.journal_id: j for j in self.journals}

    def journal(self, journal_id: str) -> JournalProfile:
        try:
            return self._by_id[journal_id]
        except KeyError:
            raise UnknownJournal(journal_id) from None

    @property
    def journal_ids(self) -> list[str]:
        return [j.journal_id for j in self.journals]


def compose_features(record: PaperRecord, combo: FeatureCombo) -> str:
    """Join the combo's normalized paper fields in canonical T, A, K order.

    Scope text never enters here; it flows through the separate scope branch.
    Raises AllFieldsEmpty when every selected field normalizes to "".
    """
    parts = []
    for feat in PAPER_FEATURES:
        if feat not in combo.paper_features:
            continue
        if feat == "T":
            raw = record.title
        elif feat == "A":
            raw = record.abstract
        else:
            raw = " ".join(record.keywords)
        normalized = normalize_text(raw)
        if normalized:
            parts.append(normalized)
    if not parts:
        raise AllFieldsEmpty(
            f"record {record.id!r}: selected fields {combo.code} normalize to empty"
        )
    return " ".join(parts)


# -- loading ---------------------------------------------------------------

_TRAIN_FRACTION = 0.8
_HASH_CUTOFF = int(_TRAIN_FRACTION * 2**32)


def hash_split_assignment(record_id: str) -> str:
    """Deterministic, platform-stable 80/20 assignment keyed on the record id."""
    digest = hashlib.sha256(record_id.encode("utf-8")).digest()
    bucket = int.from_bytes(digest[:4], "big")
    return "train" if bucket < _HASH_CUTOFF else "test"


def _iter_jsonl(path: Path):
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise MalformedRecord(path, line_no, f"invalid JSON: {exc.msg}") from None
            if not isinstance(obj, dict):
                raise MalformedRecord(path, line_no, "record is not a JSON object")
            yield line_no, obj


def _require(obj: dict, key: str, kind, path: Path, line_no: int):
    if key not in obj:
        raise MalformedRecord(path, line_no, f"missing field {key!r}")
    value = obj[key]
    if not isinstance(value, kind):
        raise MalformedRecord(
            path, line_no, f"field {key!r} has type {type(value).__name__}"
        )
    return value


def load_journals(journals_path: str | Path) -> list[JournalProfile]:
    path = Path(journals_path)
    journals: list[JournalProfile] = []
    seen: set[str] = set()
    for line_no, obj in _iter_jsonl(path):
        jid = _require(obj, "journal_id", str, path, line_no)
        name = _require(obj, "name", str, path, line_no)
        scope = _require(obj, "scope_text", str, path, line_no)
        if jid in seen:
            raise MalformedRecord(path, line_no, f"duplicate journal_id {jid!r}")
        if not normalize_text(scope):
            raise MalformedRecord(path, line_no, f"scope_text of {jid!r} normalizes to empty")
        seen.add(jid)
        journals.append(JournalProfile(journal_id=jid, name=name, scope_text=scope))
    return journals


def load_papers(papers_path: str | Path, journal_ids: set[str]) -> list[PaperRecord]:
    path = Path(papers_path)
    papers: list[PaperRecord] = []
    seen: set[str] = set()
    for line_no, obj in _iter_jsonl(path):
        pid = _require(obj, "id", str, path, line_no)
        title = _require(obj, "title", str, path, line_no)
        abstract = _require(obj, "abstract", str, path, line_no)
        keywords = _require(obj, "keywords", list, path, line_no)
        jid = _require(obj, "journal_id", str, path, line_no)
        if any(not isinstance(k, str) for k in keywords):
            raise MalformedRecord(path, line_no, "keywords must all be strings")
        if pid in seen:
            raise MalformedRecord(path, line_no, f"duplicate paper id {pid!r}")
        if jid not in journal_ids:
            raise UnknownJournal(jid, paper_id=pid)
        seen.add(pid)
        papers.append(
            PaperRecord(
                id=pid, title=title, abstract=abstract,
                keywords=tuple(keywords), journal_id=jid,
            )
        )
    return papers


def _load_split_file(split_path: Path, known_ids: set[str]) -> dict[str, str]:
    assignment: dict[str, str] = {}
    for line_no, obj in _iter_jsonl(split_path):
        pid = _require(obj, "id", str, split_path, line_no)
        split = _require(obj, "split", str, split_path, line_no)
        if split not in ("train", "test"):
            raise MalformedRecord(split_path, line_no, f"split must be train/test, got {split!r}")
        if pid not in known_ids:
            raise MalformedRecord(split_path, line_no, f"split references unknown paper id {pid!r}")
        if assignment.get(pid, split) != split:
            raise MalformedRecord(split_path, line_no, f"conflicting split for id {pid!r}")
        assignment[pid] = split
    return assignment


def load_corpus(
    papers_path: str | Path,
    journals_path: str | Path,
    split_path: str | Path | None = None,
) -> CorpusSplit:
    """Load and validate papers + journals, assigning train/test membership.

    Without a split file, records are assigned by a deterministic hash of
    their id at an 80/20 ratio. With one, listed assignments are honored
    verbatim and unlisted records go to the test side.
    """
    journals = load_journals(journals_path)
    papers = load_papers(papers_path, {j.journal_id for j in journals})

    if split_path is not None:
        assignment = _load_split_file(Path(split_path), {p.id for p in papers})
        chooser = lambda pid: assignment.get(pid, "test")  # noqa: E731
    else:
        chooser = hash_split_assignment

    train = [p for p in papers if chooser(p.id) == "train"]
    test = [p for p in papers if chooser(p.id) != "train"]
    return CorpusSplit(train=train, test=test, journals=journals)


def build_pair_dataset(split: CorpusSplit) -> PairDataset:
    """One (composed T+A+K text, journal scope text) pair per train record.

    Records whose selected fields all normalize to empty are skipped and
    counted rather than failing the run.
    """
    if not split.train:
        raise ValueError("cannot build pairs from an empty train split")
    combo = FeatureCombo.parse("TAK")
    scope_cache = {j.journal_id: normalize_text(j.scope_text) for j in split.journals}
    pairs: list[tuple[str, str]] = []
    skipped = 0
    for record in split.train:
        try:
            x = compose_features(record, combo)
        except AllFieldsEmpty:
            skipped += 1
            continue
        pairs.append((x, scope_cache[record.journal_id]))
    return PairDataset(pairs=pairs, skipped=skipped)


# -- content hashes --------------------------------------------------------


def journal_table_hash(journals: Sequence[JournalProfile]) -> str:
    """Content hash of the journal table (order-insensitive)."""
    payload = json.dumps(
        sorted((j.journal_id, j.name, j.scope_text) for j in journals),
        ensure_ascii=False,
    )
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


def corpus_hash(split: CorpusSplit) -> str:
    """Content hash of a loaded split: record ids, labels, and journal table."""
    payload = json.dumps(
        {
            "train": sorted((p.id, p.journal_id) for p in split.train),
            "test": sorted((p.id, p.journal_id) for p in split.test),
            "journals": journal_table_hash(split.journals),
        }
    )
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


# -- prepared-split output (used by the CLI prepare command) ----------------


def write_jsonl(path: str | Path, rows: Iterable[dict]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row, ensure_ascii=False) + "\n")


def paper_to_dict(record: PaperRecord) -> dict:
    return {
        "id": record.id,
        "title": record.title,
        "abstract": record.abstract,
        "keywords": list(record.keywords),
        "journal_id": record.journal_id,
    }


def journal_to_dict(journal: JournalProfile) -> dict:
    return {
        "journal_id": journal.journal_id,
        "name": journal.name,
        "scope_text": journal.scope_text,
    }
