"""Review/course data model, file ingestion and corpus-level filters."""

from __future__ import annotations

import csv
import datetime as dt
import json
import logging
import math
import os
from collections import Counter
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from types import MappingProxyType
from typing import Iterable, Mapping

from . import _io

logger = logging.getLogger(__name__)

PLATFORMS = ("udemy", "coursera", "domestika", "platzi", "crehana", "other")
RATINGS = tuple(x / 2 for x in range(2, 11))
REQUIRED_REVIEW_FIELDS = ("review_id", "course_id", "rating", "text")
REVIEW_FIELDS = ("review_id", "course_id", "platform", "username", "date", "rating", "text", "language", "url")
COURSE_FIELDS = ("course_id", "title", "url", "platform", "category", "teacher", "synthetic")

_DATE_FORMATS = ("%Y/%m/%d", "%d/%m/%Y", "%b %d, %Y", "%B %d, %Y", "%d %b %Y", "%d %B %Y", "%Y%m%d")


class CorpusError(Exception):
    """Raised when an input file cannot be read at all."""


@dataclass(frozen=True)
class Review:
    review_id: str
    course_id: str
    rating: float
    text: str
    platform: str = "other"
    username: str | None = None
    date: dt.date | None = None
    language: str | None = None
    url: str | None = None

    def to_record(self) -> dict:
        return {
            "review_id": self.review_id,
            "course_id": self.course_id,
            "platform": self.platform,
            "username": self.username,
            "date": self.date.isoformat() if self.date else None,
            "rating": self.rating,
            "text": self.text,
            "language": self.language,
            "url": self.url,
        }


@dataclass(frozen=True)
class Course:
    course_id: str
    title: str
    url: str | None = None
    platform: str = "other"
    category: str | None = None
    teacher: str | None = None
    synthetic: bool = False

    def to_record(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


@dataclass(frozen=True)
class Rejection:
    """One record that failed validation; written to the ``.rejects.jsonl`` sidecar."""

    line: int
    reason: str
    detail: str
    raw: object = None

    def to_record(self) -> dict:
        return {"line": self.line, "reason": self.reason, "detail": self.detail, "raw": self.raw}


@dataclass(frozen=True)
class FilterEvent:
    name: str
    courses_before: int
    courses_after: int
    reviews_before: int
    reviews_after: int

    @property
    def course_removal_fraction(self) -> float:
        if self.courses_before == 0:
            return 0.0
        return 1.0 - self.courses_after / self.courses_before


@dataclass(frozen=True)
class Corpus:
    """Immutable review collection with a course index.

    ``courses`` keeps insertion order. Reviews whose course is unknown get a
    stub ``Course`` with ``synthetic=True`` (see :meth:`from_records`).
    """

    reviews: tuple[Review, ...]
    courses: Mapping[str, Course]
    rejects: tuple[Rejection, ...] = ()
    history: tuple[FilterEvent, ...] = ()
    index: Mapping[str, tuple[int, ...]] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "reviews", tuple(self.reviews))
        object.__setattr__(self, "courses", MappingProxyType(dict(self.courses)))
        positions: dict[str, list[int]] = {cid: [] for cid in self.courses}
        for i, review in enumerate(self.reviews):
            if review.course_id not in positions:
                raise ValueError(f"review {review.review_id!r} references unknown course {review.course_id!r}")
            positions[review.course_id].append(i)
        object.__setattr__(self, "index", MappingProxyType({k: tuple(v) for k, v in positions.items()}))

    @classmethod
    def from_records(cls, reviews: Iterable[Review], courses: Iterable[Course] = (), rejects=(), history=()):
        reviews = tuple(reviews)
        by_id: dict[str, Course] = {}
        for course in courses:
            by_id.setdefault(course.course_id, course)
        for review in reviews:
            if review.course_id not in by_id:
                by_id[review.course_id] = Course(
                    course_id=review.course_id, title=review.course_id, platform=review.platform, synthetic=True
                )
        return cls(reviews=reviews, courses=by_id, rejects=tuple(rejects), history=tuple(history))

    def __len__(self) -> int:
        return len(self.reviews)

    def reviews_for(self, course_id: str) -> tuple[Review, ...]:
        return tuple(self.reviews[i] for i in self.index[course_id])

    @property
    def n_orphans(self) -> int:
        return sum(1 for c in self.courses.values() if c.synthetic)

    def duplicate_user_course_count(self) -> int:
        """Reviews sharing (username, course_id) with an earlier review; kept verbatim."""
        seen = Counter((r.username, r.course_id) for r in self.reviews if r.username)
        return sum(n - 1 for n in seen.values() if n > 1)

    def subset(self, keep_review, keep_course=None, event_name=None) -> "Corpus":
        reviews = tuple(r for r in self.reviews if keep_review(r))
        if keep_course is None:
            retained = {r.course_id for r in reviews}
            keep_course = lambda c: c.course_id in retained  # noqa: E731
        courses = [c for c in self.courses.values() if keep_course(c)]
        history = self.history
        if event_name:
            history = history + (
                FilterEvent(event_name, len(self.courses), len(courses), len(self.reviews), len(reviews)),
            )
        return Corpus.from_records(reviews, courses, self.rejects, history)


# -- parsing ---------------------------------------------------------------


def parse_rating(value) -> float:
    if isinstance(value, bool) or value is None:
        raise ValueError(f"rating {value!r} is not a number")
    rating = float(value)
    if not math.isfinite(rating) or rating * 2 != round(rating * 2) or not 1.0 <= rating <= 5.0:
        raise ValueError(f"rating {value!r} is not a half-star value in [1, 5]")
    return rating


def parse_date(value) -> dt.date | None:
    """Lenient date parsing; anything unrecognised becomes ``None``."""
    if value is None or value == "":
        return None
    if isinstance(value, dt.datetime):
        return value.date()
    if isinstance(value, dt.date):
        return value
    text = str(value).strip()
    try:
        return dt.datetime.fromisoformat(text.replace("Z", "+00:00")).date()
    except ValueError:
        pass
    for fmt in _DATE_FORMATS:
        try:
            return dt.datetime.strptime(text, fmt).date()
        except ValueError:
            continue
    return None


def _opt_str(value) -> str | None:
    if value is None:
        return None
    value = str(value).strip()
    return value or None


def _platform(value) -> str:
    value = (_opt_str(value) or "other").lower()
    return value if value in PLATFORMS else "other"


def review_from_record(record: Mapping) -> Review:
    """Build a :class:`Review` from a mapping, raising ``KeyError``/``ValueError``."""
    for key in REQUIRED_REVIEW_FIELDS:
        if key not in record or record[key] is None:
            raise KeyError(key)
    course_id = str(record["course_id"]).strip()
    if not course_id:
        raise ValueError("course_id is empty")
    review_id = str(record["review_id"]).strip()
    if not review_id:
        raise ValueError("review_id is empty")
    language = _opt_str(record.get("language"))
    return Review(
        review_id=review_id,
        course_id=course_id,
        rating=parse_rating(record["rating"]),
        text=str(record["text"]),
        platform=_platform(record.get("platform")),
        username=_opt_str(record.get("username")),
        date=parse_date(record.get("date")),
        language=language.lower() if language else None,
        url=_opt_str(record.get("url")),
    )


def course_from_record(record: Mapping) -> Course:
    for key in ("course_id", "title"):
        if not _opt_str(record.get(key)):
            raise KeyError(key)
    synthetic = record.get("synthetic", False)
    if isinstance(synthetic, str):
        synthetic = synthetic.strip().lower() in ("1", "true", "yes")
    return Course(
        course_id=str(record["course_id"]).strip(),
        title=str(record["title"]).strip(),
        url=_opt_str(record.get("url")),
        platform=_platform(record.get("platform")),
        category=_opt_str(record.get("category")),
        teacher=_opt_str(record.get("teacher")),
        synthetic=bool(synthetic),
    )


def _iter_raw(path: Path, fmt: str):
    """Yield ``(line_number, record_or_None, raw_text)``."""
    try:
        fh = open(path, encoding="utf-8", newline="" if fmt == "csv" else None)
    except OSError as exc:
        raise CorpusError(f"cannot read {path}: {exc}") from exc
    try:
        with fh:
            if fmt == "jsonl":
                for lineno, line in enumerate(fh, start=1):
                    if not line.strip():
                        continue
                    try:
                        yield lineno, json.loads(line), line.rstrip("\n")
                    except json.JSONDecodeError:
                        yield lineno, None, line.rstrip("\n")
            else:
                reader = csv.DictReader(fh)
                for row in reader:
                    record = {k: (None if v == "" and k != "text" else v) for k, v in row.items() if k is not None}
                    yield reader.line_num, record, None
    except UnicodeDecodeError as exc:
        raise CorpusError(f"{path} is not valid UTF-8: {exc}") from exc


def _infer_format(path: Path, fmt: str | None) -> str:
    if fmt is None:
        fmt = "csv" if path.suffix.lower() == ".csv" else "jsonl"
    if fmt not in ("jsonl", "csv"):
        raise ValueError(f"unsupported format {fmt!r}")
    return fmt


def courses_sidecar(path: Path) -> Path:
    """``reviews.jsonl`` -> ``reviews.courses.jsonl`` (same for ``.csv``)."""
    return path.with_name(f"{path.stem}.courses{path.suffix}")


def rejects_sidecar(path: Path) -> Path:
    return path.with_name(f"{path.stem}.rejects.jsonl")


def _load_courses(path: Path, fmt: str) -> tuple[list[Course], list[Rejection]]:
    courses, rejects, seen = [], [], set()
    for lineno, record, raw in _iter_raw(path, fmt):
        if not isinstance(record, dict):
            rejects.append(Rejection(lineno, "invalid_json", f"{path.name}: unparseable course record", raw))
            continue
        try:
            course = course_from_record(record)
        except KeyError as exc:
            rejects.append(Rejection(lineno, "missing_field", f"{path.name}: course missing {exc.args[0]}", record))
            continue
        if course.course_id in seen:
            rejects.append(Rejection(lineno, "duplicate_course_id", f"{path.name}: {course.course_id}", record))
            continue
        seen.add(course.course_id)
        courses.append(course)
    return courses, rejects


def load_corpus(path, format: str | None = None, courses_path=None) -> Corpus:
    """Load reviews (and courses, when available) into a :class:`Corpus`.

    Invalid records never abort the load: each one becomes a
    :class:`Rejection` in ``corpus.rejects``. An unreadable file raises
    :class:`CorpusError`.

    When ``courses_path`` is omitted, a sibling ``<stem>.courses.<ext>`` is
    used if it exists.
    """
    path = Path(path)
    fmt = _infer_format(path, format)
    if not path.is_file():
        raise CorpusError(f"cannot read {path}: no such file")
    reviews: list[Review] = []
    rejects: list[Rejection] = []
    seen: set[str] = set()
    for lineno, record, raw in _iter_raw(path, fmt):
        if record is None:
            rejects.append(Rejection(lineno, "invalid_json", "line is not valid JSON", raw))
            continue
        if not isinstance(record, dict):
            rejects.append(Rejection(lineno, "not_an_object", "record is not a JSON object", record))
            continue
        try:
            review = review_from_record(record)
        except KeyError as exc:
            rejects.append(Rejection(lineno, "missing_field", f"missing required field {exc.args[0]}", record))
            continue
        except ValueError as exc:
            reason = "invalid_rating" if "rating" in str(exc) else "invalid_field"
            rejects.append(Rejection(lineno, reason, str(exc), record))
            continue
        if review.review_id in seen:
            rejects.append(Rejection(lineno, "duplicate_review_id", review.review_id, record))
            continue
        seen.add(review.review_id)
        reviews.append(review)

    courses: list[Course] = []
    if courses_path is None and courses_sidecar(path).is_file():
        courses_path = courses_sidecar(path)
    if courses_path is not None:
        courses_path = Path(courses_path)
        courses, course_rejects = _load_courses(courses_path, _infer_format(courses_path, None))
        rejects.extend(course_rejects)

    corpus = Corpus.from_records(reviews, courses, rejects)
    if rejects:
        logger.warning("%s: %d record(s) rejected", path, len(rejects))
    if corpus.n_orphans:
        logger.info("%s: %d course stub(s) synthesized for orphan reviews", path, corpus.n_orphans)
    dups = corpus.duplicate_user_course_count()
    if dups:
        logger.info("%s: %d repeated (username, course) review(s) kept verbatim", path, dups)
    return corpus


def save_corpus(corpus: Corpus, path, courses_path=None) -> tuple[Path, Path]:
    """Write reviews and courses as JSONL (or CSV if ``path`` ends in ``.csv``)."""
    path = Path(path)
    courses_path = Path(courses_path) if courses_path else courses_sidecar(path)
    if path.suffix.lower() == ".csv":
        _io.write_csv(path, list(REVIEW_FIELDS), ([r.to_record()[k] for k in REVIEW_FIELDS] for r in corpus.reviews))
    else:
        _io.write_jsonl(path, (r.to_record() for r in corpus.reviews))
    if courses_path.suffix.lower() == ".csv":
        rows = ([c.to_record()[k] for k in COURSE_FIELDS] for c in corpus.courses.values())
        _io.write_csv(courses_path, list(COURSE_FIELDS), rows)
    else:
        _io.write_jsonl(courses_path, (c.to_record() for c in corpus.courses.values()))
    return path, courses_path


def write_rejects(corpus: Corpus, path) -> int:
    return _io.write_jsonl(path, (r.to_record() for r in corpus.rejects))


# -- filters ---------------------------------------------------------------


def filter_language(corpus: Corpus, code: str, detector=None) -> Corpus:
    """Keep reviews whose language is ``code``; drop courses left without reviews.

    Reviews without a ``language`` label are classified with ``detector``
    (the bundled n-gram detector by default) and the label is attached.
    """
    code = code.lower()
    unlabeled = [i for i, r in enumerate(corpus.reviews) if r.language is None]
    reviews = list(corpus.reviews)
    if unlabeled:
        if detector is None:
            from .langid import LanguageDetector

            detector = LanguageDetector.pretrained()
        for i in unlabeled:
            text = reviews[i].text
            lang, _ = detector.detect(text) if text.strip() else ("und", 0.0)
            reviews[i] = replace(reviews[i], language=lang)
    relabeled = Corpus.from_records(reviews, corpus.courses.values(), corpus.rejects, corpus.history)
    return relabeled.subset(lambda r: r.language == code, event_name=f"language={code}")


def filter_min_reviews(corpus: Corpus, min_reviews: int) -> Corpus:
    """Drop courses with fewer than ``min_reviews`` reviews, with their reviews.

    The removal is recorded as a :class:`FilterEvent` in ``corpus.history``.
    """
    if isinstance(min_reviews, bool) or int(min_reviews) != min_reviews or min_reviews < 1:
        raise ValueError(f"min_reviews must be a positive integer, got {min_reviews!r}")
    keep = {cid for cid, pos in corpus.index.items() if len(pos) >= min_reviews}
    out = corpus.subset(
        lambda r: r.course_id in keep, keep_course=lambda c: c.course_id in keep, event_name=f"min_reviews={min_reviews}"
    )
    event = out.history[-1]
    logger.info(
        "min_reviews=%d removed %d of %d courses (%.1f%%)",
        min_reviews,
        event.courses_before - event.courses_after,
        event.courses_before,
        100 * event.course_removal_fraction,
    )
    return out


def corpus_summary(corpus: Corpus) -> dict:
    counts = sorted(len(v) for v in corpus.index.values())
    median = None
    if counts:
        mid = len(counts) // 2
        median = counts[mid] if len(counts) % 2 else (counts[mid - 1] + counts[mid]) / 2
    return {
        "n_reviews": len(corpus.reviews),
        "n_courses": len(corpus.courses),
        "n_synthetic_courses": corpus.n_orphans,
        "n_rejects": len(corpus.rejects),
        "duplicate_user_course": corpus.duplicate_user_course_count(),
        "reviews_per_course_max": counts[-1] if counts else 0,
        "reviews_per_course_min": counts[0] if counts else 0,
        "reviews_per_course_median": median,
        "by_platform": dict(sorted(Counter(r.platform for r in corpus.reviews).items())),
    }


def ensure_dir(path) -> Path:
    path = Path(path)
    os.makedirs(path, exist_ok=True)
    return path
