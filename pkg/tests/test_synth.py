from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mooclens.corpus import RATINGS
from mooclens.synth import (
    DEFAULT_RATING_MIX,
    PlantedSpec,
    allocate_counts,
    build_four_course_fixture,
    build_review_fixture,
    generate_corpus,
    load_planted,
    match_topics,
    pseudo_words,
    save_planted,
)
from mooclens.textprep import TextPreprocessor

SMALL = PlantedSpec(n_topics=3, vocab_size=30, n_docs=40, doc_len=10, seed=5, n_courses=4)


def test_empty_corpus_has_valid_phi():
    corpus, phi, theta, vocab = generate_corpus(PlantedSpec(n_docs=0))
    assert len(corpus) == 0 and theta.shape == (0, 5)
    assert phi.shape == (5, 200) and np.allclose(phi.sum(axis=1), 1.0)


def test_same_seed_same_corpus():
    a = generate_corpus(SMALL)
    b = generate_corpus(SMALL)
    assert a[0].reviews == b[0].reviews
    assert np.array_equal(a[1], b[1]) and np.array_equal(a[2], b[2])
    c = generate_corpus(PlantedSpec(**{**SMALL.to_dict(), "seed": 6}))
    assert c[0].reviews != a[0].reviews


def test_token_frequencies_match_mixture(planted):
    p = planted["theta"] @ planted["phi"]
    expected = 60 * p.sum(axis=0)
    var = 60 * (p * (1 - p)).sum(axis=0)
    counts = Counter(w for r in planted["corpus"].reviews for w in r.text.split())
    observed = np.array([counts[w] for w in planted["vocab"]])
    common = expected >= 5
    assert common.sum() >= 50
    z = (observed[common] - expected[common]) / np.sqrt(var[common])
    assert np.abs(z).max() <= 3
    # words expected fewer than 5 times are pooled, where the normal band applies
    pooled = (observed[~common].sum() - expected[~common].sum()) / np.sqrt(var[~common].sum())
    assert abs(pooled) <= 3
    assert observed.sum() == 2000 * 60


def test_generated_corpus_satisfies_corpus_invariants(planted):
    corpus = planted["corpus"]
    assert len(corpus) == 2000 and len(corpus.courses) == 20
    assert corpus.n_orphans == 0
    for cid in corpus.courses:
        assert list(corpus.index[cid]) == [i for i, r in enumerate(corpus.reviews) if r.course_id == cid]
    assert all(r.rating in RATINGS and len(r.text.split()) == 60 for r in corpus.reviews)


def test_planted_ratings_follow_mix_exactly(planted):
    counts = Counter(r.rating for r in planted["corpus"].reviews)
    assert dict(counts) == {k: round(v * 2000) for k, v in DEFAULT_RATING_MIX.items()}


@settings(max_examples=200, deadline=None)
@given(st.lists(st.integers(1, 100), min_size=1, max_size=9), st.integers(0, 5000))
def test_allocation_is_exact(weights, total):
    keys = RATINGS[: len(weights)]
    mix = {k: w / sum(weights) for k, w in zip(keys, weights)}
    counts = allocate_counts(mix, total)
    assert sum(counts.values()) == total
    assert all(abs(counts[k] - mix[k] * total) < 1 for k in keys)


def test_pseudo_words_survive_preprocessing():
    words = pseudo_words(300)
    assert len(set(words)) == 300
    assert TextPreprocessor().transform([" ".join(words)])[0] == words


def test_spec_validation():
    with pytest.raises(ValueError):
        PlantedSpec(rating_mix={5.0: 0.5})
    with pytest.raises(ValueError):
        PlantedSpec(rating_mix={5.2: 1.0})
    with pytest.raises(ValueError):
        PlantedSpec(alpha=0)
    assert PlantedSpec.from_dict(SMALL.to_dict()) == SMALL


def test_planted_round_trip(tmp_path):
    corpus, phi, theta, vocab = generate_corpus(SMALL)
    save_planted(tmp_path / "p.json", SMALL, phi, theta, vocab)
    spec, phi2, theta2, vocab2 = load_planted(tmp_path / "p.json")
    assert spec == SMALL and vocab2 == vocab
    assert np.array_equal(phi2, phi) and np.array_equal(theta2, theta)


def test_match_identity_and_permutation(planted):
    phi = planted["phi"]
    assignment, cos = match_topics(phi, phi)
    assert list(assignment) == [0, 1, 2, 3, 4] and cos == pytest.approx(1.0)
    perm = [3, 0, 4, 1, 2]
    assignment, cos = match_topics(phi[perm], phi)
    assert [perm[j] for j in assignment] == [0, 1, 2, 3, 4]
    assert cos == pytest.approx(1.0)
    exhaustive, _ = match_topics(phi[perm], phi, exhaustive=True)
    assert list(exhaustive) == list(assignment)


def test_match_cosine_decreases_with_noise(planted):
    phi = planted["phi"]
    rng = np.random.default_rng(0)
    scores = []
    for weight in (0.1, 0.3, 0.6):
        noise = rng.dirichlet(np.ones(phi.shape[1]), size=phi.shape[0])
        scores.append(match_topics((1 - weight) * phi + weight * noise, phi)[1])
    assert all(s < 1.0 for s in scores)
    assert scores[0] > scores[1] > scores[2]


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**31), st.integers(2, 8))
def test_match_is_a_bijection(seed, k):
    rng = np.random.default_rng(seed)
    learned, true = rng.random((k, 12)), rng.random((k, 12))
    for exhaustive in (False, True):
        assignment, cos = match_topics(learned, true, exhaustive=exhaustive)
        assert sorted(assignment) == list(range(k))
        assert 0 <= cos <= 1 + 1e-12


def test_review_fixture_layout():
    corpus = build_review_fixture()
    assert len(corpus) == 100 and len(corpus.courses) == 10
    assert all(r.language is None for r in corpus.reviews)
    assert build_review_fixture().reviews == corpus.reviews


def test_four_course_fixture_rating_levels():
    corpus = build_four_course_fixture()
    means = [np.mean([r.rating for r in corpus.reviews_for(cid)]) for cid in corpus.courses]
    assert means == sorted(means, reverse=True)
    assert len(corpus.courses) == 4 and len(corpus) == 120
