import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError
from sklearn.pipeline import make_pipeline

from mooclens.langid import LanguageDetector
from mooclens.lda import GibbsLDA
from mooclens.sentiment import PolarityScorer, ValenceRuleScorer
from mooclens.textprep import TextPreprocessor, VocabularyProjector

ESTIMATORS = [
    (LanguageDetector, {"max_n": 2, "profile_size": 50, "min_length": 5}),
    (TextPreprocessor, {"min_token_length": 3, "lemmatize": False, "min_count": 2}),
    (VocabularyProjector, {"category": "Content"}),
    (ValenceRuleScorer, {"alpha": 10.0, "pos_threshold": 0.2, "neg_threshold": -0.3, "raw": True}),
    (PolarityScorer, {"booster_factor": 1.5, "pos_threshold": 0.05}),
    (GibbsLDA, {"n_topics": 3, "alpha": 0.2, "n_iter": 50, "random_state": 9}),
]


@pytest.mark.parametrize("cls, params", ESTIMATORS, ids=[c.__name__ for c, _ in ESTIMATORS])
def test_params_round_trip_through_clone(cls, params):
    est = cls(**params)
    got = est.get_params()
    assert {k: got[k] for k in params} == params
    twin = clone(est)
    assert twin is not est and twin.get_params() == got
    est.set_params(**{k: v for k, v in cls().get_params().items() if k in params})
    assert est.get_params() == cls().get_params()


def test_scoring_leaves_params_untouched():
    scorer = ValenceRuleScorer()
    scorer.transform(["a good course"])
    assert scorer.get_params()["lexicon"] is None
    assert PolarityScorer().fit().get_params()["lexicon"] is None


def test_unfitted_estimators_raise():
    with pytest.raises(NotFittedError):
        GibbsLDA().transform([["a"]])
    with pytest.raises(NotFittedError):
        LanguageDetector().distances("some text here")


def test_pipeline_text_to_topics():
    texts = ["the lecture video was clear and the quiz was fair"] * 5 + ["the teacher explained every example"] * 5
    pipe = make_pipeline(TextPreprocessor(min_count=1), GibbsLDA(n_topics=2, alpha=0.5, n_iter=30, random_state=0))
    weights = pipe.fit_transform(texts)
    assert weights.shape == (10, 2)
    np.testing.assert_allclose(weights.sum(axis=1), 1.0)
    assert np.array_equal(weights, clone(pipe).fit(texts).transform(texts))


def test_scorer_fit_is_noop():
    scorer = ValenceRuleScorer()
    assert scorer.fit(["anything"]) is scorer
    assert list(scorer.predict(["a good course", "a bad course", "a course"])) == ["Positive", "Negative", "Neutral"]
