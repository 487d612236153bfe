import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mooclens.langid import UNDETERMINED, LanguageDetector, detect_language, ngram_profile, out_of_place


def test_english_sentence():
    code, conf = detect_language("This course was fantastic and very well explained")
    assert code == "en"
    assert conf > 0.5


def test_empty_text_is_an_error():
    with pytest.raises(ValueError):
        detect_language("")
    with pytest.raises(ValueError):
        detect_language("   ")


def test_short_text_is_undetermined():
    assert detect_language("ok") == (UNDETERMINED, 0.0)


@pytest.mark.parametrize("text, code", [
    ("El curso es muy bueno y el profesor explica todo con claridad", "es"),
    ("Le cours est très intéressant et les vidéos sont bien faites", "fr"),
    ("O curso é muito bom e as aulas são bem explicadas pelo professor", "pt"),
    ("Der Kurs ist sehr gut und die Erklärungen sind wirklich hilfreich", "de"),
])
def test_bundled_languages(text, code):
    assert detect_language(text)[0] == code


def test_profile_ranks_by_count_then_gram():
    prof = ngram_profile("aa ab", max_n=1, size=10)
    assert prof == ["a", "b"]


def test_out_of_place_distance():
    assert out_of_place(["a", "b"], {"a": 0, "b": 1}, 300) == 0
    assert out_of_place(["a", "b"], {"b": 0, "a": 1}, 300) == 2
    assert out_of_place(["a", "z"], {"a": 0}, 300) == 300


def test_fit_predict_on_toy_languages():
    det = LanguageDetector(min_length=5).fit(["aaaa bbbb aaab", "xxxx yyyy xxyx"], ["ab", "xy"])
    assert list(det.predict(["abab aaaa", "xyxy yyyy"])) == ["ab", "xy"]
    assert list(det.classes_) == ["ab", "xy"]


@settings(max_examples=100, deadline=None)
@given(st.text(min_size=1, max_size=200).filter(lambda t: t.strip()))
def test_confidence_in_unit_interval(text):
    code, conf = detect_language(text)
    assert 0.0 <= conf <= 1.0
    if code == UNDETERMINED:
        assert conf == 0.0
