import csv
import json

import numpy as np
import pytest

from mooclens.characterize import (
    CourseProfile,
    build_course_profile,
    build_profiles,
    check_profile,
    emit_plot_data,
    emit_report,
    order_profiles,
    parse_report,
    write_plot_data,
)
from mooclens.corpus import Corpus, Course, Review, load_corpus
from mooclens.lda import TopicModel, top_words, topic_proportions, train_lda
from mooclens.sentiment import ValenceRuleScorer, aggregate_course_sentiment, score_corpus
from mooclens.synth import build_four_course_fixture
from mooclens.textprep import CategoryLexicon, TokenDoc, preprocess_corpus, project_vocabulary

HEALTH = {"health", "nutrition", "diet", "body", "exercise", "food", "yoga", "meditation", "sleep", "weight"}


def _pipeline(corpus, k_qual=3, k_content=4):
    docs = preprocess_corpus(corpus)
    lex = CategoryLexicon.bundled()
    qual = [project_vocabulary(d, lex, "Q") for d in docs]
    content = [project_vocabulary(d, lex, "C") for d in docs]
    qm = train_lda([d for d in qual if not d.empty], k_qual, alpha=0.5, iterations=300, seed=1)
    cm = train_lda([d for d in content if not d.empty], k_content, alpha=0.5, iterations=300, seed=1)
    sentiments = aggregate_course_sentiment(score_corpus(corpus, ValenceRuleScorer()), corpus)
    return build_profiles(corpus, sentiments, qm, cm, qual, content), qm, cm, qual, content


@pytest.fixture(scope="module")
def four():
    return _pipeline(build_four_course_fixture())


@pytest.fixture(scope="module")
def sample(sample_path):
    return _pipeline(load_corpus(sample_path))


def _fixed_model(k=2):
    words = ("aa", "bb", "cc")[:max(k, 2)]
    phi = np.eye(k, len(words)) * 0.98 + 0.01
    phi = phi / phi.sum(axis=1, keepdims=True)
    return TopicModel(words, phi, np.zeros((0, k)), 0.01, 0.01, 0, 1)


def test_single_review_with_one_possible_topic():
    # phi rules out the other topic, so every sweep assigns all 5 tokens to topic 0
    model = TopicModel(("aa", "bb"), np.array([[1.0, 0.0], [0.0, 1.0]]), np.zeros((0, 2)), 0.01, 0.01, 0, 1)
    prof = build_course_profile(Course("c", "C"), [Review("r", "c", 5.0, "x")], None, model, model,
                                [TokenDoc("r", ["aa"] * 5)], [TokenDoc("r", ["bb"])])
    top = (5 + 0.01) / (5 + 0.02) * 100
    assert prof.qual_topics == pytest.approx((top, 100 - top), abs=1e-9)
    assert prof.content_topics[1] == pytest.approx((1 + 0.01) / (1 + 0.02) * 100, abs=1e-9)
    assert prof.low_evidence


def test_no_usable_docs_is_flagged_uniform():
    model = _fixed_model(2)
    prof = build_course_profile(Course("c", "C"), [Review("r", "c", 3.0, "x")], None, model, model,
                                [TokenDoc("r", [])], [TokenDoc("r", ["zz"])])
    assert prof.qual_topics == (50.0, 50.0) and prof.content_topics == (50.0, 50.0)
    assert prof.low_evidence and prof.n_qual_docs == 0
    with pytest.raises(ValueError):
        build_course_profile(Course("c", "C"), [], None, model, model, [], [])


def test_profiles_satisfy_invariants(sample):
    profiles = sample[0]
    assert len(profiles) == 10
    for prof in profiles:
        check_profile(prof)
        assert abs(sum(prof.qual_topics) - 100) <= 1e-6 and abs(sum(prof.content_topics) - 100) <= 1e-6


def test_profiles_are_deterministic(sample_path, sample):
    again = _pipeline(load_corpus(sample_path))[0]
    assert [p.to_record() for p in again] == [p.to_record() for p in sample[0]]


def test_one_course_equals_corpus_proportions():
    corpus = build_four_course_fixture()
    one = Corpus.from_records(corpus.reviews_for("four-0"), [corpus.courses["four-0"]])
    profiles, qm, cm, qual, content = _pipeline(one, 2, 2)
    assert len(profiles) == 1
    assert profiles[0].qual_topics == tuple(topic_proportions(qm, qual))
    assert profiles[0].content_topics == tuple(topic_proportions(cm, content))


def test_health_course_pattern(four):
    profiles, _, cm, _, _ = four
    health = next(p for p in profiles if p.title.startswith("Health"))
    k = int(np.argmax(health.content_topics))
    assert len(HEALTH & set(top_words(cm, 6)[k].top_words)) >= 3
    assert health.content_topics[k] > 40


def test_four_course_report(tmp_path, four):
    profiles = four[0]
    emit_report(profiles, tmp_path / "r.csv", format="csv", order="rating")
    with open(tmp_path / "r.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 4
    assert [r["course_id"] for r in rows] == [p.course_id for p in order_profiles(profiles, "rating")]
    header = list(rows[0])
    assert {"mean_rating", "pct_positive", "pct_neutral", "pct_negative"} <= set(header)
    assert sum(h.startswith("qual:") for h in header) == 3 and sum(h.startswith("content:") for h in header) == 4
    for r in rows:
        assert sum(float(r[f"pct_{x}"]) for x in ("positive", "neutral", "negative")) == pytest.approx(100)


def test_report_round_trip(tmp_path, sample):
    profiles = sample[0]
    path = emit_report(profiles, tmp_path / "r.json", generated_at="2020-01-01T00:00:00+00:00")
    data = json.loads(path.read_text())
    assert data["schema_version"] == 1 and data["generated_at"] == "2020-01-01T00:00:00+00:00"
    assert list(data["profiles"][0]) == ["course_id", "title", "n_reviews", "mean_rating", "low_evidence",
                                         "n_qual_docs", "n_content_docs", "sentiment", "qual_topics",
                                         "content_topics"]
    parsed = parse_report(path)
    assert sorted(parsed, key=lambda p: p.course_id) == sorted(profiles, key=lambda p: p.course_id)
    one = emit_report(profiles[:1], tmp_path / "one.json")
    assert len(json.loads(one.read_text())["profiles"]) == 1


def test_report_errors(tmp_path, sample):
    with pytest.raises(ValueError):
        emit_report([], tmp_path / "x.json")
    with pytest.raises(ValueError):
        emit_report(sample[0], tmp_path / "x.txt", format="xml")
    with pytest.raises(OSError):
        emit_report(sample[0], tmp_path / "missing" / "x.json")
    (tmp_path / "v2.json").write_text(json.dumps({"schema_version": 2, "profiles": []}))
    with pytest.raises(ValueError):
        parse_report(tmp_path / "v2.json")


def test_plot_rows_for_one_course(sample):
    prof = sample[0][0]
    rows = emit_plot_data([prof])
    assert len(rows) == 1 + 3 + 3 + 4
    by_panel = {}
    for cid, panel, label, value in rows:
        by_panel.setdefault(panel, []).append(value)
    assert sum(by_panel["qual_topic"]) == pytest.approx(100, abs=1e-6)
    assert sum(by_panel["content_topic"]) == pytest.approx(100, abs=1e-6)
    assert by_panel["rating"] == [prof.mean_rating]


def test_plot_data_matches_independent_flattening(tmp_path, sample):
    profiles = sample[0]
    write_plot_data(tmp_path / "p.csv", profiles)
    expected = []
    for rec in (p.to_record() for p in profiles):
        expected.append([rec["course_id"], "rating", "mean_rating", rec["mean_rating"]])
        for label, pct in rec["sentiment"]["label_percentages"].items():
            expected.append([rec["course_id"], "sentiment", label, pct])
        for panel, key in (("qual_topic", "qual_topics"), ("content_topic", "content_topics")):
            for label, value in zip(rec[key]["labels"], rec[key]["values"]):
                expected.append([rec["course_id"], panel, label, value])
    with open(tmp_path / "p.csv", newline="") as fh:
        got = list(csv.reader(fh))
    assert got[0] == ["course_id", "panel", "label", "value"]
    assert len(got) - 1 == len(expected)
    for row, exp in zip(got[1:], expected):
        assert row[:3] == exp[:3] and float(row[3]) == pytest.approx(exp[3], abs=1e-12)


def test_profile_record_round_trip(sample):
    for prof in sample[0]:
        assert CourseProfile.from_record(json.loads(json.dumps(prof.to_record()))) == prof
