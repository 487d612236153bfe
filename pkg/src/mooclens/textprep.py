"""Cleaning, tokenization, lemmatization, stopwords and vocabulary projection."""

from __future__ import annotations

import enum
import re
import unicodedata
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping

from sklearn.base import BaseEstimator, TransformerMixin

from . import _io
from ._lemmatizer import Lemmatizer
from ._validation import check_docs, check_texts

_URL = re.compile(r"(?:https?://|www\.)\S+", re.IGNORECASE)
_APOSTROPHES = re.compile(r"['’‘`´]")
_LETTER_RUN = re.compile(r"[^\W\d_]+", re.UNICODE)


class Category(str, enum.Enum):
    QUALITATIVE = "Qualitative"
    CONTENT = "Content"

    @classmethod
    def parse(cls, value) -> "Category":
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower()
        for member in cls:
            if key in (member.value.lower(), member.value[0].lower(), member.name.lower()):
                return member
        if key in ("qual", "qualitativedescription"):
            return cls.QUALITATIVE
        raise ValueError(f"unknown category {value!r}")


@dataclass(frozen=True)
class TokenDoc:
    review_id: str
    lemmas: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "lemmas", tuple(self.lemmas))

    @property
    def empty(self) -> bool:
        return not self.lemmas

    def to_record(self) -> dict:
        return {"review_id": self.review_id, "lemmas": list(self.lemmas)}


@dataclass(frozen=True)
class FrequencyTable:
    counts: Mapping[str, int]
    total_tokens: int

    def __getitem__(self, word):
        return self.counts[word]

    def __len__(self):
        return len(self.counts)


class CategoryLexicon:
    """Word -> :class:`Category` mapping; a word belongs to one category at most."""

    def __init__(self, entries: Mapping[str, Category | str]):
        self.entries = {str(w).lower(): Category.parse(c) for w, c in entries.items()}

    @classmethod
    def from_file(cls, path) -> "CategoryLexicon":
        entries: dict[str, Category] = {}
        for lineno, line in enumerate(_io.read_text_lines(path), start=1):
            parts = line.split("\t") if "\t" in line else line.split()
            if len(parts) != 2:
                raise ValueError(f"{path}: malformed lexicon line {line!r}")
            word, cat = parts[0].strip().lower(), Category.parse(parts[1])
            if word in entries and entries[word] is not cat:
                raise ValueError(f"{path}: {word!r} listed under both categories")
            entries[word] = cat
        return cls(entries)

    @classmethod
    def bundled(cls) -> "CategoryLexicon":
        return cls.from_file(_io.data_path("categories.tsv"))

    def words(self, category) -> frozenset[str]:
        category = Category.parse(category)
        return frozenset(w for w, c in self.entries.items() if c is category)

    def counts(self) -> dict[str, int]:
        return {c.value: len(self.words(c)) for c in Category}

    def __contains__(self, word):
        return word in self.entries

    def __len__(self):
        return len(self.entries)


def load_stopwords(path=None) -> frozenset[str]:
    """Bundled English stoplist (180 words) or one word per line from ``path``."""
    path = _io.data_path("stopwords.txt") if path is None else Path(path)
    return frozenset(line.lower() for line in _io.read_text_lines(path))


def clean_text(raw: str) -> str:
    """Lowercase ``raw`` and keep only its letter runs, single-space separated.

    URLs, numbers, punctuation, symbols and control characters are dropped;
    apostrophes are deleted (``don't`` -> ``dont``) and hyphens split words.
    """
    text = unicodedata.normalize("NFC", raw)
    text = _URL.sub(" ", text)
    text = _APOSTROPHES.sub("", text)
    # \d misses numerals such as superscripts and fractions
    text = "".join(" " if ch.isnumeric() else ch for ch in text)
    return " ".join(_LETTER_RUN.findall(text.lower()))


def tokenize(cleaned: str, min_length: int = 2) -> list[str]:
    return [tok for tok in cleaned.split() if len(tok) >= min_length]


def lemmatize(tokens: Iterable[str], lemmatizer: Lemmatizer | None = None) -> list[str]:
    lemmatizer = lemmatizer or Lemmatizer.bundled()
    return [lemmatizer.lemma(tok) for tok in tokens]


def remove_stopwords(lemmas: Iterable[str], stoplist) -> list[str]:
    return [w for w in lemmas if w not in stoplist]


def build_frequency_table(docs) -> FrequencyTable:
    counts: Counter[str] = Counter()
    for doc in check_docs(docs):
        counts.update(doc)
    ordered = dict(sorted(counts.items()))
    return FrequencyTable(ordered, sum(ordered.values()))


def nominate_candidates(table: FrequencyTable, min_count: int = 500) -> list[str]:
    """Words occurring strictly more than ``min_count`` times, most frequent first."""
    hits = [(w, n) for w, n in table.counts.items() if n > min_count]
    return [w for w, _ in sorted(hits, key=lambda wn: (-wn[1], wn[0]))]


def project_vocabulary(doc: TokenDoc, lexicon: CategoryLexicon, category) -> TokenDoc:
    """Keep only the lemmas of ``doc`` that belong to ``category``."""
    keep = lexicon.words(category)
    return TokenDoc(doc.review_id, tuple(w for w in doc.lemmas if w in keep))


class TextPreprocessor(TransformerMixin, BaseEstimator):
    """clean -> tokenize -> lemmatize -> stopword removal, one list per text.

    ``fit`` records the corpus frequency table over the resulting lemmas
    (``frequency_table_``) and the words above ``min_count``
    (``candidates_``), which is how new lexicon entries get nominated.
    """

    def __init__(self, stopwords=None, min_token_length=2, lemmatize=True, min_count=500):
        self.stopwords = stopwords
        self.min_token_length = min_token_length
        self.lemmatize = lemmatize
        self.min_count = min_count

    def _stoplist(self):
        if self.stopwords is None:
            return load_stopwords()
        if isinstance(self.stopwords, (str, Path)):
            return load_stopwords(self.stopwords)
        return frozenset(self.stopwords)

    def process(self, text: str, stoplist=None) -> list[str]:
        stoplist = self._stoplist() if stoplist is None else stoplist
        tokens = tokenize(clean_text(text), self.min_token_length)
        if self.lemmatize:
            tokens = lemmatize(tokens)
        return remove_stopwords(tokens, stoplist)

    def fit(self, X, y=None):
        self.fit_transform(X)
        return self

    def fit_transform(self, X, y=None):
        docs = self.transform(X)
        self.frequency_table_ = build_frequency_table(docs)
        self.candidates_ = nominate_candidates(self.frequency_table_, self.min_count)
        return docs

    def transform(self, X):
        texts = check_texts(X)
        stoplist = self._stoplist()
        return [self.process(t, stoplist) for t in texts]


class VocabularyProjector(TransformerMixin, BaseEstimator):
    """Restrict token lists to one lexicon category. Stateless; ``fit`` is a no-op."""

    def __init__(self, lexicon=None, category="Qualitative"):
        self.lexicon = lexicon
        self.category = category

    def _lexicon(self) -> CategoryLexicon:
        if self.lexicon is None:
            return CategoryLexicon.bundled()
        if isinstance(self.lexicon, CategoryLexicon):
            return self.lexicon
        if isinstance(self.lexicon, (str, Path)):
            return CategoryLexicon.from_file(self.lexicon)
        return CategoryLexicon(self.lexicon)

    def fit(self, X=None, y=None):
        return self

    def transform(self, X):
        keep = self._lexicon().words(self.category)
        return [[w for w in doc if w in keep] for doc in check_docs(X)]


def preprocess_corpus(corpus, preprocessor: TextPreprocessor | None = None, fit: bool = False) -> list[TokenDoc]:
    """Token documents for every review; ``fit`` also records frequencies on the preprocessor."""
    preprocessor = preprocessor or TextPreprocessor()
    texts = [r.text for r in corpus.reviews]
    lemmas = preprocessor.fit_transform(texts) if fit else preprocessor.transform(texts)
    return [TokenDoc(r.review_id, doc) for r, doc in zip(corpus.reviews, lemmas)]


def write_token_docs(path, docs: Iterable[TokenDoc]) -> int:
    return _io.write_jsonl(path, (d.to_record() for d in docs))


def read_token_docs(path) -> list[TokenDoc]:
    return [TokenDoc(str(rec["review_id"]), tuple(rec["lemmas"])) for rec in _io.read_jsonl(path)]
