"""Lexicon sentiment scoring, labeling and course-level aggregation.

Two native engines:

``valence_rule``
    word valences on a [-4, 4] scale, adjusted by up to three preceding
    booster/negator tokens, summed and squashed to [-1, 1] with
    ``s / sqrt(s**2 + alpha)``.
``polarity_avg``
    mean of word polarities in [-1, 1]; a booster directly before a hit
    scales it by 1.3.

A third source, ``external``, carries labels produced elsewhere.
"""

from __future__ import annotations

import functools
import json
import logging
import math
import re
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from . import _io
from ._validation import check_texts
from .stats import UndefinedCorrelationError, pearson, spearman
from .textprep import clean_text, tokenize

logger = logging.getLogger(__name__)

ENGINES = ("valence_rule", "polarity_avg", "external")
LABELS = ("Positive", "Neutral", "Negative")
ALPHA = 15.0
NEGATION_SCALAR = -0.74
LOOKBACK_DECAY = (1.0, 0.95, 0.9)
POLARITY_BOOST = 1.3

_RAW_TOKEN = re.compile(r"[\w'’]+", re.UNICODE)
_RAW_TOKEN_APOS = re.compile(r"['’]")


@dataclass(frozen=True)
class SentimentScore:
    review_id: str
    engine: str
    compound: float | None
    label: str

    def to_record(self) -> dict:
        return {"review_id": self.review_id, "engine": self.engine, "compound": self.compound, "label": self.label}

    @classmethod
    def from_record(cls, rec: Mapping) -> "SentimentScore":
        compound = rec.get("compound")
        return cls(str(rec["review_id"]), rec["engine"], None if compound is None else float(compound), rec["label"])


@dataclass(frozen=True)
class CourseSentiment:
    course_id: str
    mean_compound: float | None
    label_counts: Mapping[str, int]
    majority_label: str
    n_scored: int
    engine: str

    def label_share(self, label: str) -> float:
        return self.label_counts.get(label, 0) / self.n_scored if self.n_scored else 0.0


class ValenceLexicon:
    """Valences in [-4, 4], positive booster increments and a negator set.

    The three word sets are kept disjoint: a word listed as booster or
    negator is dropped from the valences (with a warning), so a modifier is
    never also counted as a sentiment hit.
    """

    def __init__(self, valences: Mapping[str, float], boosters: Mapping[str, float], negators: Iterable[str]):
        negators = frozenset(w.lower() for w in negators)
        boosters = {w.lower(): float(m) for w, m in boosters.items()}
        for w, m in boosters.items():
            if not m > 0:
                raise ValueError(f"booster {w!r} has non-positive magnitude {m}")
        clean = {}
        for w, v in valences.items():
            w, v = w.lower(), float(v)
            if not -4.0 <= v <= 4.0:
                raise ValueError(f"valence of {w!r} outside [-4, 4]: {v}")
            if w in boosters or w in negators:
                logger.warning("dropping %r from valences: it is a booster or negator", w)
                continue
            clean[w] = v
        self.valences = clean
        self.boosters = boosters
        self.negators = negators

    @classmethod
    def from_files(cls, valence_path, booster_path, negator_path) -> "ValenceLexicon":
        valences = dict(_split2(line) for line in _io.read_text_lines(valence_path))
        boosters = dict(_split2(line) for line in _io.read_text_lines(booster_path))
        negators = list(_io.read_text_lines(negator_path))
        return cls({w: float(v) for w, v in valences.items()}, {w: float(m) for w, m in boosters.items()}, negators)

    @classmethod
    def bundled(cls) -> "ValenceLexicon":
        return cls.from_files(_io.data_path("valence.tsv"), _io.data_path("boosters.tsv"), _io.data_path("negators.txt"))

    def negated(self) -> "ValenceLexicon":
        """Same lexicon with every valence sign-flipped."""
        return ValenceLexicon({w: -v for w, v in self.valences.items()}, self.boosters, self.negators)


class PolarityLexicon:
    def __init__(self, polarities: Mapping[str, float], boosters: Iterable[str] = ()):
        self.boosters = frozenset(w.lower() for w in boosters)
        self.polarities = {}
        for w, p in polarities.items():
            p = float(p)
            if not -1.0 <= p <= 1.0:
                raise ValueError(f"polarity of {w!r} outside [-1, 1]: {p}")
            if w.lower() not in self.boosters:
                self.polarities[w.lower()] = p

    @classmethod
    def from_files(cls, polarity_path, booster_path=None) -> "PolarityLexicon":
        polarities = {w: float(p) for w, p in (_split2(line) for line in _io.read_text_lines(polarity_path))}
        boosters = list(_io.read_text_lines(booster_path)) if booster_path else []
        return cls(polarities, boosters)

    @classmethod
    def bundled(cls) -> "PolarityLexicon":
        return cls.from_files(_io.data_path("polarity.tsv"), _io.data_path("polarity_boosters.txt"))


def _split2(line: str) -> tuple[str, str]:
    parts = line.split("\t") if "\t" in line else line.split()
    if len(parts) < 2:
        raise ValueError(f"malformed lexicon line {line!r}")
    return parts[0].strip(), parts[1].strip()


def normalize_score(score: float, alpha: float = ALPHA) -> float:
    if score == 0:
        return 0.0
    return max(-1.0, min(1.0, score / math.sqrt(score * score + alpha)))


def score_valence_rule(tokens, lexicon: ValenceLexicon, alpha: float = ALPHA, negation_scalar: float = NEGATION_SCALAR):
    """Compound score of a token sequence in [-1, 1]; ``0.0`` for no tokens."""
    words = [t.lower() for t in tokens]
    total = 0.0
    for i, word in enumerate(words):
        valence = lexicon.valences.get(word)
        if valence is None:
            continue
        for dist in range(1, 4):
            j = i - dist
            if j < 0:
                break
            prev = words[j]
            boost = lexicon.boosters.get(prev)
            if boost is not None and valence != 0:
                valence += math.copysign(boost, valence) * LOOKBACK_DECAY[dist - 1]
            if prev in lexicon.negators:
                valence *= negation_scalar
        total += valence
    return normalize_score(total, alpha)


def score_polarity_avg(tokens, lexicon: PolarityLexicon, booster_factor: float = POLARITY_BOOST) -> float:
    """Mean polarity over lexicon hits; no hits gives ``0.0``."""
    words = [t.lower() for t in tokens]
    hits = []
    for i, word in enumerate(words):
        p = lexicon.polarities.get(word)
        if p is None:
            continue
        if i > 0 and words[i - 1] in lexicon.boosters:
            p = max(-1.0, min(1.0, p * booster_factor))
        hits.append(p)
    if not hits:
        return 0.0
    return max(-1.0, min(1.0, math.fsum(hits) / len(hits)))


def label_from_compound(compound: float, pos_threshold: float = 0.1, neg_threshold: float = -0.1) -> str:
    """Positive above ``pos_threshold``, Negative below ``neg_threshold``, else Neutral."""
    if neg_threshold > pos_threshold:
        raise ValueError("neg_threshold must not exceed pos_threshold")
    if compound > pos_threshold:
        return "Positive"
    if compound < neg_threshold:
        return "Negative"
    return "Neutral"


def sentiment_tokens(text: str, raw: bool = False) -> list[str]:
    """Tokens fed to the scorers: cleaned by default, or raw word tokens."""
    if raw:
        return [_RAW_TOKEN_APOS.sub("", t) for t in _RAW_TOKEN.findall(text)]
    return tokenize(clean_text(text))


@functools.lru_cache(maxsize=None)
def _bundled(kind):
    return kind.bundled()


class _Scorer(TransformerMixin, BaseEstimator):
    engine = ""

    def fit(self, X=None, y=None):
        return self

    def score_tokens(self, tokens) -> float:  # pragma: no cover - abstract
        raise NotImplementedError

    def score_text(self, text: str) -> float:
        return self.score_tokens(sentiment_tokens(text, raw=self.raw))

    def transform(self, X):
        return np.array([self.score_text(t) for t in check_texts(X)], dtype=float)

    def predict(self, X):
        return np.array(
            [label_from_compound(c, self.pos_threshold, self.neg_threshold) for c in self.transform(X)], dtype=object
        )


class ValenceRuleScorer(_Scorer):
    """Valence/booster/negation scorer. ``transform`` returns compounds, ``predict`` labels."""

    engine = "valence_rule"

    def __init__(self, lexicon=None, alpha=ALPHA, negation_scalar=NEGATION_SCALAR, pos_threshold=0.1,
                 neg_threshold=-0.1, raw=False):
        self.lexicon = lexicon
        self.alpha = alpha
        self.negation_scalar = negation_scalar
        self.pos_threshold = pos_threshold
        self.neg_threshold = neg_threshold
        self.raw = raw

    def score_tokens(self, tokens):
        lexicon = self.lexicon if self.lexicon is not None else _bundled(ValenceLexicon)
        return score_valence_rule(tokens, lexicon, self.alpha, self.negation_scalar)


class PolarityScorer(_Scorer):
    """Averaging polarity scorer."""

    engine = "polarity_avg"

    def __init__(self, lexicon=None, booster_factor=POLARITY_BOOST, pos_threshold=0.1, neg_threshold=-0.1, raw=False):
        self.lexicon = lexicon
        self.booster_factor = booster_factor
        self.pos_threshold = pos_threshold
        self.neg_threshold = neg_threshold
        self.raw = raw

    def score_tokens(self, tokens):
        lexicon = self.lexicon if self.lexicon is not None else _bundled(PolarityLexicon)
        return score_polarity_avg(tokens, lexicon, self.booster_factor)


def make_scorer(engine: str, **params) -> _Scorer:
    if engine == "valence_rule":
        return ValenceRuleScorer(**params)
    if engine == "polarity_avg":
        return PolarityScorer(**params)
    raise ValueError(f"engine {engine!r} has no native scorer")


def score_corpus(corpus, scorer: _Scorer) -> list[SentimentScore]:
    out = []
    for review in corpus.reviews:
        compound = scorer.score_text(review.text)
        label = label_from_compound(compound, scorer.pos_threshold, scorer.neg_threshold)
        out.append(SentimentScore(review.review_id, scorer.engine, compound, label))
    return out


@dataclass
class LabelImport:
    scores: list[SentimentScore] = field(default_factory=list)
    rejects: list[dict] = field(default_factory=list)
    unknown_ids: list[str] = field(default_factory=list)


def _canonical_label(value) -> str | None:
    if not isinstance(value, str):
        return None
    for label in LABELS:
        if value.strip().lower() == label.lower():
            return label
    return None


def import_external_labels(path, known_ids: Iterable[str] | None = None) -> LabelImport:
    """Read ``{review_id, label}`` JSONL produced by an external classifier.

    Labels must be Positive, Negative or Neutral (case-insensitive); other
    records are rejected. When ``known_ids`` is given, ids outside it are
    listed in ``unknown_ids`` and not attached.
    """
    known = set(known_ids) if known_ids is not None else None
    result = LabelImport()
    with open(Path(path), encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except ValueError:
                result.rejects.append({"line": lineno, "reason": "invalid_json", "raw": line.rstrip("\n")})
                continue
            if not isinstance(rec, dict) or "review_id" not in rec:
                result.rejects.append({"line": lineno, "reason": "missing_field", "raw": rec})
                continue
            label = _canonical_label(rec.get("label"))
            if label is None:
                result.rejects.append({"line": lineno, "reason": "invalid_label", "raw": rec})
                continue
            rid = str(rec["review_id"])
            if known is not None and rid not in known:
                result.unknown_ids.append(rid)
                continue
            result.scores.append(SentimentScore(rid, "external", None, label))
    if result.rejects or result.unknown_ids:
        logger.warning(
            "%s: %d rejected label(s), %d unknown review id(s)", path, len(result.rejects), len(result.unknown_ids)
        )
    return result


def majority_label(counts: Mapping[str, int]) -> str:
    """Most frequent label; any tie for first place resolves to Neutral."""
    if not counts or not any(counts.values()):
        return "Neutral"
    top = max(counts.values())
    winners = [label for label in LABELS if counts.get(label, 0) == top]
    return winners[0] if len(winners) == 1 else "Neutral"


def aggregate_course_sentiment(scores: Iterable[SentimentScore], corpus) -> list[CourseSentiment]:
    """Per-course mean compound and majority label, in corpus course order.

    Courses without any scored review are left out (and logged).
    """
    course_of = {r.review_id: r.course_id for r in corpus.reviews}
    per_course: dict[str, list[SentimentScore]] = {}
    unresolved = 0
    for score in scores:
        cid = course_of.get(score.review_id)
        if cid is None:
            unresolved += 1
            continue
        per_course.setdefault(cid, []).append(score)
    if unresolved:
        logger.warning("%d score(s) do not resolve to a review in the corpus", unresolved)
    out, missing = [], []
    for cid in corpus.courses:
        group = per_course.get(cid)
        if not group:
            missing.append(cid)
            continue
        counts = Counter(s.label for s in group)
        compounds = [s.compound for s in group if s.compound is not None]
        mean = math.fsum(compounds) / len(compounds) if compounds else None
        engines = sorted({s.engine for s in group})
        out.append(
            CourseSentiment(
                course_id=cid,
                mean_compound=mean,
                label_counts={label: counts.get(label, 0) for label in LABELS},
                majority_label=majority_label(counts),
                n_scored=len(group),
                engine="+".join(engines),
            )
        )
    if missing:
        logger.info("%d course(s) without scored reviews excluded from aggregation", len(missing))
    return out


def correlate_sentiment_rating(scores: Iterable[SentimentScore], corpus, method: str = "pearson") -> float:
    """Review-level correlation between compound and star rating."""
    rating_of = {r.review_id: r.rating for r in corpus.reviews}
    pairs = [(s.compound, rating_of[s.review_id]) for s in scores if s.compound is not None and s.review_id in rating_of]
    if len(pairs) < 2:
        raise UndefinedCorrelationError("need at least two (compound, rating) pairs")
    x, y = zip(*pairs)
    if method == "pearson":
        return pearson(x, y)
    if method == "spearman":
        return spearman(x, y)
    raise ValueError(f"unknown correlation method {method!r}")


def write_scores(path, scores: Iterable[SentimentScore]) -> int:
    return _io.write_jsonl(path, (s.to_record() for s in scores))


def read_scores(path) -> list[SentimentScore]:
    return [SentimentScore.from_record(rec) for rec in _io.read_jsonl(path)]
