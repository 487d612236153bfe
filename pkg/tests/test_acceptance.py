"""Acceptance criteria, one marker per criterion; outcomes are listed in the terminal summary."""

import math
import time
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import brute_proportions, naive_cv, naive_umass, scorable

from mooclens.characterize import emit_report, parse_report
from mooclens.cli import main
from mooclens.coherence import coherence_cv, coherence_umass, sweep_topic_count
from mooclens.corpus import load_corpus, save_corpus
from mooclens.lda import infer_doc_topics, topic_proportions, train_lda
from mooclens.sentiment import (
    PolarityLexicon,
    ValenceLexicon,
    label_from_compound,
    score_polarity_avg,
    score_valence_rule,
)
from mooclens.stats import GroupedTopicMatrix, manova_pillai, pearson, permutation_test, rating_histogram, spearman
from mooclens.synth import PlantedSpec, allocate_counts, generate_corpus, match_topics, phi_on_vocab

ROOT = Path(__file__).resolve().parents[1]
SAMPLE = ROOT / "configs" / "sample.ini"
PLANTED = PlantedSpec(seed=42)


def acceptance(number, title):
    return pytest.mark.acceptance(number, title)


# 1 ---------------------------------------------------------------------------

RATING_MIX = {5.0: 0.63, 4.5: 0.10, 4.0: 0.115, 3.5: 0.04, 3.0: 0.05, 2.5: 0.015, 2.0: 0.02, 1.5: 0.01, 1.0: 0.02}


@acceptance(1, "rating histogram matches the constructed 63 / 21.5 / 15.5 mix")
def test_rating_bias_fixture():
    t0 = time.perf_counter()
    corpus, *_ = generate_corpus(PlantedSpec(n_docs=2000, doc_len=20, rating_mix=RATING_MIX, seed=5))
    hist = rating_histogram(corpus)
    elapsed = time.perf_counter() - t0
    assert hist.buckets == {k: v for k, v in allocate_counts(RATING_MIX, 2000).items() if v}
    assert hist.share(5.0) == 63.0
    assert hist.share(4.0, 4.5) == 21.5
    assert hist.share(1.0, 3.5) == 15.5
    assert elapsed < 1.0


# 2 ---------------------------------------------------------------------------


@pytest.fixture(scope="module")
def planted():
    corpus, phi, theta, vocab = generate_corpus(PLANTED)
    return corpus, phi, vocab, [r.text.split() for r in corpus.reviews]


@pytest.fixture(scope="module")
def small_model(planted):
    return train_lda(planted[3][:300], 5, alpha=0.1, beta=0.01, iterations=200, seed=3)


@acceptance(2, "topic proportions sum to 100 and equal a brute-force summation")
@settings(max_examples=40, deadline=None)
@given(st.data())
def test_topic_proportions(small_model, planted, data):
    docs = planted[3]
    picks = data.draw(st.lists(st.integers(0, len(docs) - 1), min_size=1, max_size=50))
    chosen = [docs[i][: data.draw(st.integers(1, 60))] for i in picks]
    got = topic_proportions(small_model, chosen)
    assert abs(got.sum() - 100.0) <= 1e-6
    expected = brute_proportions([list(infer_doc_topics(small_model, d)) for d in chosen])
    assert np.abs(got - np.array(expected)).max() <= 1e-9


# 3 ---------------------------------------------------------------------------


@acceptance(3, "planted topics recovered with mean matched cosine >= 0.85 in under 2 minutes")
def test_lda_recovery(planted):
    _, phi, vocab, docs = planted
    t0 = time.perf_counter()
    model = train_lda(docs, 5, alpha=0.1, beta=0.01, iterations=1000, seed=1)
    elapsed = time.perf_counter() - t0
    _, cosines = match_topics(phi_on_vocab(model, vocab), phi)
    print(f"mean matched cosine {np.mean(cosines):.4f} in {elapsed:.1f}s")
    assert np.mean(cosines) >= 0.85
    assert elapsed < 120


# 4 ---------------------------------------------------------------------------

TOY_DOCS = st.lists(st.lists(st.sampled_from("abcdefgh"), min_size=1, max_size=15), min_size=1, max_size=20)
TOY_TOPICS = st.lists(st.lists(st.sampled_from("abcdefgh"), min_size=2, max_size=6, unique=True),
                      min_size=1, max_size=3)


@acceptance(4, "coherence equals brute force and the planted sweep recommends K within 1 of 5")
@settings(max_examples=300, deadline=None)
@given(TOY_TOPICS, TOY_DOCS, st.integers(2, 12))
def test_coherence_oracles(topics, docs, window):
    pairs = [(coherence_cv(topics, docs, window), naive_cv(topics, docs, window))]
    if scorable(topics, docs):
        pairs.append((coherence_umass(topics, docs), naive_umass(topics, docs)))
    for got, expected in pairs:
        assert (math.isnan(got) and math.isnan(expected)) or abs(got - expected) <= 1e-9


@acceptance(4, "coherence equals brute force and the planted sweep recommends K within 1 of 5")
def test_planted_sweep(planted):
    report = sweep_topic_count(planted[3], 2, 10, beta=0.01, iterations=1000, seed=42)
    print({k: round(cv, 4) for k, cv, _ in report.entries}, "recommended", report.recommended_k)
    assert abs(report.recommended_k - 5) <= 1


# 5 ---------------------------------------------------------------------------

LEX = ValenceLexicon.bundled()
POL = PolarityLexicon.bundled()
BOOSTERS = sorted(LEX.boosters)
POSITIVE = sorted(w for w, v in LEX.valences.items() if v > 0)
NEGATIVE = sorted(w for w, v in LEX.valences.items() if v < 0)
FUZZ_VOCAB = sorted(LEX.valences)[::5] + BOOSTERS + sorted(LEX.negators) + ["course", "lecture", "the"]


@acceptance(5, "sentiment compound range, empty input, boosters, negation and threshold labels")
def test_sentiment_contract():
    rng = np.random.default_rng(7)
    for _ in range(10_000):
        tokens = list(rng.choice(FUZZ_VOCAB, size=rng.integers(0, 50)))
        assert -1.0 <= score_valence_rule(tokens, LEX) <= 1.0
        assert -1.0 <= score_polarity_avg(tokens, POL) <= 1.0
    assert score_valence_rule([], LEX) == 0.0
    assert score_polarity_avg([], POL) == 0.0
    flipped = LEX.negated()
    for _ in range(2000):
        tokens = list(rng.choice(FUZZ_VOCAB, size=rng.integers(0, 30)))
        assert abs(score_valence_rule(tokens, flipped) + score_valence_rule(tokens, LEX)) <= 1e-12
    for _ in range(2000):
        # same-sign contexts without negators
        pool, sign = (POSITIVE, 1) if rng.random() < 0.5 else (NEGATIVE, -1)
        context = list(rng.choice(pool + ["course", "the"] + BOOSTERS, size=rng.integers(0, 10)))
        at = int(rng.integers(0, len(context) + 1))
        word, booster = str(rng.choice(pool)), str(rng.choice(BOOSTERS))
        base = score_valence_rule(context[:at] + [word] + context[at:], LEX)
        boosted = score_valence_rule(context[:at] + [booster, word] + context[at:], LEX)
        assert sign * (boosted - base) >= -1e-15
    assert [label_from_compound(v) for v in (-0.1, 0.1)] == ["Neutral", "Neutral"]
    assert [label_from_compound(v) for v in (math.nextafter(0.1, 1), math.nextafter(-0.1, -1))] == [
        "Positive", "Negative"]


# 6 ---------------------------------------------------------------------------

CORRELATION_CASES = [
    # (x, y, pearson, spearman)
    ([1, 2, 3], [2, 4, 7], 5 / math.sqrt(76 / 3), 1.0),
    ([1, 2, 2, 3], [1, 3, 2, 4], 3 / math.sqrt(10), 4.5 / math.sqrt(22.5)),
    ([1, 2, 3, 4, 5], [2, 1, 4, 3, 5], 0.8, 0.8),
    ([1, 1, 2, 2], [1, 2, 2, 3], 1 / math.sqrt(2), 3 / math.sqrt(18)),
    ([0, 1, 2, 3], [3, 3, 1, 0], -5.5 / math.sqrt(33.75), -4.5 / math.sqrt(22.5)),
]


@acceptance(6, "pearson and spearman match hand computations; monotone pairs give +-1")
@pytest.mark.parametrize("x, y, r, rho", CORRELATION_CASES)
def test_correlation_oracle(x, y, r, rho):
    assert abs(pearson(x, y) - r) <= 1e-12
    assert abs(spearman(x, y) - rho) <= 1e-12
    z = [v ** 3 + 1 for v in x]
    if len(set(x)) == len(x):
        assert spearman(x, z) == 1.0
        assert spearman(x, [-v for v in z]) == -1.0


# 7 ---------------------------------------------------------------------------


def _groups(rows_a, rows_b):
    return GroupedTopicMatrix(np.vstack([rows_a, rows_b]), ["Positive"] * len(rows_a) + ["Negative"] * len(rows_b))


@acceptance(7, "MANOVA null on identical groups, agreement on disjoint dominant topics")
def test_manova_sanity():
    rng = np.random.default_rng(21)
    same = rng.dirichlet(np.ones(4), 10) * 100
    assert permutation_test(_groups(same, same), n_perm=999, seed=0) > 0.05
    a = rng.dirichlet([20.0, 1, 1, 1], 12) * 100
    b = rng.dirichlet([1.0, 1, 20, 1], 12) * 100
    m = _groups(a, b)
    res = manova_pillai(m)
    p_perm = permutation_test(m, n_perm=999, seed=0)
    assert res.p < 0.01 and p_perm < 0.01
    assert abs(res.p - p_perm) <= 0.05


# 8 ---------------------------------------------------------------------------

STAGES = ["ingest", "preprocess", "sentiment", "lda-train", "coherence-sweep", "stats", "characterize"]


def _snapshot(out):
    return {p.relative_to(out).as_posix(): p.read_bytes() for p in sorted(out.rglob("*"))
            if p.is_file() and "manifests" not in p.parts}


@acceptance(8, "byte-identical reruns of every stage; fixture pipeline under 10 s")
def test_determinism(tmp_path, monkeypatch):
    monkeypatch.setenv("SOURCE_DATE_EPOCH", "1700000000")
    out = tmp_path / "sample"
    t0 = time.perf_counter()
    for stage in STAGES:
        assert main([stage, "-c", str(SAMPLE), "-o", str(out)]) == 0
    elapsed = time.perf_counter() - t0
    first = _snapshot(out)
    for stage in STAGES:
        assert main([stage, "-c", str(SAMPLE), "-o", str(out)]) == 0
        assert _snapshot(out) == first, stage
    for kind in ("planted", "reviews", "four_course"):
        runs = []
        for i in range(2):
            synth_out = tmp_path / f"{kind}{i}"
            args = ["synth", "--kind", kind, "-o", str(synth_out), "--seed", "3"]
            if kind == "planted":
                args += ["--set", "synth.n_docs=200"]
            assert main(args) == 0
            runs.append(_snapshot(synth_out))
        assert runs[0] == runs[1] and runs[0], kind
    print(f"fixture pipeline {elapsed:.2f}s")
    assert elapsed < 10


# 9 ---------------------------------------------------------------------------


@acceptance(9, "corpus and profile round trips are lossless")
def test_round_trips(tmp_path, monkeypatch, sample_path):
    corpus = load_corpus(sample_path)
    for suffix in (".jsonl", ".csv"):
        path, _ = save_corpus(corpus, tmp_path / f"corpus{suffix}")
        again = load_corpus(path)
        assert again.reviews == corpus.reviews
        assert dict(again.courses) == dict(corpus.courses)
    out = tmp_path / "run"
    for stage in ["ingest", "preprocess", "sentiment", "lda-train", "characterize"]:
        assert main([stage, "-c", str(SAMPLE), "-o", str(out)]) == 0
    profiles = parse_report(out / "report.json")
    emit_report(profiles, tmp_path / "again.json", generated_at="2024-01-01T00:00:00+00:00")
    assert parse_report(tmp_path / "again.json") == profiles
