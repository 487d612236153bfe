"""Per-course profiles: rating mean, sentiment summary and two topic mixes.

Report JSON layout::

    {"schema_version": 1, "generated_at": "...", "profiles": [
        {"course_id", "title", "n_reviews", "mean_rating", "low_evidence",
         "n_qual_docs", "n_content_docs",
         "sentiment": {"engine", "mean_compound", "n_scored", "majority_label",
                       "label_counts": {...}, "label_percentages": {...}} | null,
         "qual_topics": {"labels": [...], "values": [...]},
         "content_topics": {"labels": [...], "values": [...]}}]}
"""

from __future__ import annotations

import datetime as dt
import json
import math
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from . import _io
from .lda import TopicModel, in_vocabulary, topic_proportions
from .sentiment import LABELS, CourseSentiment

SCHEMA_VERSION = 1
LOW_EVIDENCE_MIN = 5
PANELS = ("rating", "sentiment", "qual_topic", "content_topic")


@dataclass(frozen=True)
class CourseProfile:
    course_id: str
    title: str
    n_reviews: int
    mean_rating: float
    sentiment: CourseSentiment | None
    qual_topics: tuple[float, ...]
    content_topics: tuple[float, ...]
    topic_labels: tuple[tuple[str, ...], tuple[str, ...]]
    low_evidence: bool = False
    n_qual_docs: int = 0
    n_content_docs: int = 0

    def sentiment_percentages(self) -> dict[str, float]:
        if self.sentiment is None:
            return {}
        return {label: 100.0 * self.sentiment.label_share(label) for label in LABELS}

    def to_record(self) -> dict:
        sent = None
        if self.sentiment is not None:
            s = self.sentiment
            sent = {
                "engine": s.engine,
                "mean_compound": s.mean_compound,
                "n_scored": s.n_scored,
                "majority_label": s.majority_label,
                "label_counts": {label: s.label_counts.get(label, 0) for label in LABELS},
                "label_percentages": self.sentiment_percentages(),
            }
        return {
            "course_id": self.course_id,
            "title": self.title,
            "n_reviews": self.n_reviews,
            "mean_rating": self.mean_rating,
            "low_evidence": self.low_evidence,
            "n_qual_docs": self.n_qual_docs,
            "n_content_docs": self.n_content_docs,
            "sentiment": sent,
            "qual_topics": {"labels": list(self.topic_labels[0]), "values": list(self.qual_topics)},
            "content_topics": {"labels": list(self.topic_labels[1]), "values": list(self.content_topics)},
        }

    @classmethod
    def from_record(cls, rec: dict) -> "CourseProfile":
        sent = rec.get("sentiment")
        sentiment = None
        if sent is not None:
            sentiment = CourseSentiment(
                course_id=rec["course_id"],
                mean_compound=sent["mean_compound"],
                label_counts={label: int(sent["label_counts"].get(label, 0)) for label in LABELS},
                majority_label=sent["majority_label"],
                n_scored=int(sent["n_scored"]),
                engine=sent["engine"],
            )
        return cls(
            course_id=rec["course_id"],
            title=rec["title"],
            n_reviews=int(rec["n_reviews"]),
            mean_rating=float(rec["mean_rating"]),
            sentiment=sentiment,
            qual_topics=tuple(float(v) for v in rec["qual_topics"]["values"]),
            content_topics=tuple(float(v) for v in rec["content_topics"]["values"]),
            topic_labels=(tuple(rec["qual_topics"]["labels"]), tuple(rec["content_topics"]["labels"])),
            low_evidence=bool(rec["low_evidence"]),
            n_qual_docs=int(rec.get("n_qual_docs", 0)),
            n_content_docs=int(rec.get("n_content_docs", 0)),
        )


def topic_labels(model: TopicModel) -> tuple[str, ...]:
    labels = model.labels or (None,) * model.n_topics
    return tuple(label or f"topic_{k}" for k, label in enumerate(labels))


def _course_mix(model: TopicModel, docs) -> tuple[tuple[float, ...], int]:
    usable = [d for d in docs if in_vocabulary(model, d)]
    if not usable:
        return tuple([100.0 / model.n_topics] * model.n_topics), 0
    return tuple(float(v) for v in topic_proportions(model, usable)), len(usable)


def build_course_profile(course, reviews: Sequence, sentiment: CourseSentiment | None, qual_model: TopicModel,
                         content_model: TopicModel, qual_docs: Sequence, content_docs: Sequence,
                         low_evidence_min: int = LOW_EVIDENCE_MIN) -> CourseProfile:
    """Profile of one course from its reviews and their two projections.

    ``qual_docs``/``content_docs`` are the course's projected token documents.
    A projection with no usable document yields a uniform vector; fewer than
    ``low_evidence_min`` usable documents in either projection sets
    ``low_evidence``.
    """
    if not reviews:
        raise ValueError(f"course {course.course_id!r} has no reviews")
    qual, n_qual = _course_mix(qual_model, qual_docs)
    content, n_content = _course_mix(content_model, content_docs)
    mean = math.fsum(r.rating for r in reviews) / len(reviews)
    return CourseProfile(
        course_id=course.course_id,
        title=course.title,
        n_reviews=len(reviews),
        mean_rating=mean,
        sentiment=sentiment,
        qual_topics=qual,
        content_topics=content,
        topic_labels=(topic_labels(qual_model), topic_labels(content_model)),
        low_evidence=min(n_qual, n_content) < low_evidence_min,
        n_qual_docs=n_qual,
        n_content_docs=n_content,
    )


def build_profiles(corpus, sentiments: Sequence[CourseSentiment], qual_model: TopicModel, content_model: TopicModel,
                   qual_docs: Sequence, content_docs: Sequence) -> list[CourseProfile]:
    """Profiles for every course with at least one review, in corpus order."""
    by_id_q = {d.review_id: d for d in qual_docs}
    by_id_c = {d.review_id: d for d in content_docs}
    sent = {s.course_id: s for s in sentiments}
    out = []
    for cid, course in corpus.courses.items():
        reviews = corpus.reviews_for(cid)
        if not reviews:
            continue
        ids = [r.review_id for r in reviews]
        out.append(
            build_course_profile(course, reviews, sent.get(cid), qual_model, content_model,
                                 [by_id_q[i] for i in ids if i in by_id_q], [by_id_c[i] for i in ids if i in by_id_c])
        )
    return out


def order_profiles(profiles: Sequence[CourseProfile], by: str = "n_reviews") -> list[CourseProfile]:
    if by == "n_reviews":
        return sorted(profiles, key=lambda p: (-p.n_reviews, p.course_id))
    if by == "rating":
        return sorted(profiles, key=lambda p: (-p.mean_rating, p.course_id))
    raise ValueError(f"unknown ordering {by!r}")


def default_timestamp() -> str:
    """UTC time, or ``SOURCE_DATE_EPOCH`` when set (reproducible builds)."""
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    when = dt.datetime.fromtimestamp(int(epoch), dt.timezone.utc) if epoch else dt.datetime.now(dt.timezone.utc)
    return when.replace(microsecond=0).isoformat()


def report_dict(profiles: Sequence[CourseProfile], generated_at: str | None = None, order: str = "n_reviews") -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "generated_at": generated_at or default_timestamp(),
        "profiles": [p.to_record() for p in order_profiles(profiles, order)],
    }


def _csv_rows(profiles: Sequence[CourseProfile]):
    q_labels, c_labels = profiles[0].topic_labels
    header = ["course_id", "title", "n_reviews", "mean_rating", "low_evidence", "sentiment_engine", "mean_compound",
              "majority_label"]
    header += [f"pct_{label.lower()}" for label in LABELS]
    header += [f"qual:{lab}" for lab in q_labels] + [f"content:{lab}" for lab in c_labels]
    rows = []
    for p in profiles:
        if p.topic_labels != (q_labels, c_labels):
            raise ValueError("profiles come from different models; cannot share CSV columns")
        s = p.sentiment
        pct = p.sentiment_percentages()
        row = [p.course_id, p.title, p.n_reviews, p.mean_rating, p.low_evidence,
               s.engine if s else None, s.mean_compound if s else None, s.majority_label if s else None]
        row += [pct.get(label) for label in LABELS]
        row += list(p.qual_topics) + list(p.content_topics)
        rows.append(row)
    return header, rows


def emit_report(profiles: Sequence[CourseProfile], path, format: str = "json", generated_at: str | None = None,
                order: str = "n_reviews") -> Path:
    """Write profiles as schema-versioned JSON or as a flat CSV."""
    if not profiles:
        raise ValueError("no profiles to report")
    path = Path(path)
    if format == "json":
        text = json.dumps(report_dict(profiles, generated_at, order), ensure_ascii=False, indent=2) + "\n"
        path.write_text(text, encoding="utf-8")
    elif format == "csv":
        header, rows = _csv_rows(order_profiles(profiles, order))
        _io.write_csv(path, header, rows)
    else:
        raise ValueError(f"unknown report format {format!r}")
    return path


def parse_report(path) -> list[CourseProfile]:
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    if data.get("schema_version") != SCHEMA_VERSION:
        raise ValueError(f"unsupported report schema_version {data.get('schema_version')!r}")
    return [CourseProfile.from_record(rec) for rec in data["profiles"]]


def emit_plot_data(profiles: Sequence[CourseProfile]) -> list[tuple[str, str, str, float]]:
    """Long-format ``(course_id, panel, label, value)`` rows behind a per-course figure."""
    rows = []
    for p in profiles:
        rows.append((p.course_id, "rating", "mean_rating", p.mean_rating))
        for label, pct in p.sentiment_percentages().items():
            rows.append((p.course_id, "sentiment", label, pct))
        rows += [(p.course_id, "qual_topic", lab, v) for lab, v in zip(p.topic_labels[0], p.qual_topics)]
        rows += [(p.course_id, "content_topic", lab, v) for lab, v in zip(p.topic_labels[1], p.content_topics)]
    return rows


def write_plot_data(path, profiles: Sequence[CourseProfile]) -> None:
    _io.write_csv(path, ["course_id", "panel", "label", "value"], emit_plot_data(profiles))


def check_profile(profile: CourseProfile, atol: float = 1e-6) -> None:
    """Raise if a profile breaks its invariants."""
    if profile.n_reviews < 1:
        raise ValueError("n_reviews must be >= 1")
    if not 1.0 <= profile.mean_rating <= 5.0:
        raise ValueError("mean_rating outside [1, 5]")
    for name in ("qual_topics", "content_topics"):
        total = float(np.sum(getattr(profile, name)))
        if abs(total - 100.0) > atol:
            raise ValueError(f"{name} sums to {total}, not 100")
