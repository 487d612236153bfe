"""Rank-order character n-gram language identification.

Each language is represented by its most frequent character 1-3 grams,
ranked. A text's own ranked profile is compared with every language using
the out-of-place distance; the closest language wins.
"""

from __future__ import annotations

import json
import re
from collections import Counter

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_is_fitted

from . import _io
from ._validation import check_texts

UNDETERMINED = "und"
_NON_LETTER = re.compile(r"[^\W\d_]+", re.UNICODE)


def ngram_profile(text: str, max_n: int = 3, size: int = 300) -> list[str]:
    """Ranked n-grams of ``text``; words are padded with one space each side."""
    counts: Counter[str] = Counter()
    for word in _NON_LETTER.findall(text.lower()):
        padded = f" {word} "
        for n in range(1, max_n + 1):
            for i in range(len(padded) - n + 1):
                gram = padded[i : i + n]
                if gram.strip():
                    counts[gram] += 1
    ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    return [gram for gram, _ in ranked[:size]]


def out_of_place(doc_profile: list[str], lang_ranks: dict[str, int], penalty: int) -> int:
    total = 0
    for rank, gram in enumerate(doc_profile):
        lang_rank = lang_ranks.get(gram)
        total += penalty if lang_rank is None else abs(rank - lang_rank)
    return total


class LanguageDetector(ClassifierMixin, BaseEstimator):
    """Cavnar-Trenkle style classifier.

    Parameters
    ----------
    max_n : int
        Longest character n-gram.
    profile_size : int
        Number of top-ranked n-grams kept per language profile.
    min_length : int
        Texts shorter than this (after trimming) are labelled ``"und"``.

    ``confidence`` is ``1 - d_best / d_max`` where ``d_max`` is the distance
    of a text sharing no n-gram with any profile, so it reads as the share
    of the worst-case distance the best language avoided.
    """

    def __init__(self, max_n=3, profile_size=300, min_length=20):
        self.max_n = max_n
        self.profile_size = profile_size
        self.min_length = min_length

    @classmethod
    def pretrained(cls, **params):
        """Detector with the bundled profiles (en, es, fr, pt, de, it, nl)."""
        det = cls(**params)
        profiles = json.loads(_io.data_path("langprofiles.json").read_text(encoding="utf-8"))
        det._set_profiles({k: v[: det.profile_size] for k, v in profiles.items()})
        return det

    def _set_profiles(self, profiles):
        self.profiles_ = profiles
        self.classes_ = np.array(sorted(profiles), dtype=object)
        self._langs = sorted(profiles)
        self._ranks = {lang: {g: r for r, g in enumerate(grams)} for lang, grams in profiles.items()}
        return self

    def fit(self, X, y):
        texts = check_texts(X)
        labels = list(y)
        if len(labels) != len(texts):
            raise ValueError("X and y have different lengths")
        joined: dict[str, list[str]] = {}
        for text, label in zip(texts, labels):
            joined.setdefault(str(label), []).append(text)
        profiles = {
            lang: ngram_profile("\n".join(parts), self.max_n, self.profile_size) for lang, parts in joined.items()
        }
        return self._set_profiles(profiles)

    def distances(self, text: str) -> dict[str, int]:
        check_is_fitted(self, "profiles_")
        doc = ngram_profile(text, self.max_n, self.profile_size)
        return {lang: out_of_place(doc, self._ranks[lang], self.profile_size) for lang in self._langs}

    def detect(self, text: str) -> tuple[str, float]:
        """Return ``(language_code, confidence)``; ``("und", 0.0)`` for short text."""
        if not isinstance(text, str) or not text.strip():
            raise ValueError("text is empty")
        if len(text.strip()) < self.min_length:
            return UNDETERMINED, 0.0
        doc = ngram_profile(text, self.max_n, self.profile_size)
        if not doc:
            return UNDETERMINED, 0.0
        dist = {lang: out_of_place(doc, self._ranks[lang], self.profile_size) for lang in self._langs}
        best = min(self._langs, key=dist.__getitem__)
        worst_case = len(doc) * self.profile_size
        return best, 1.0 - dist[best] / worst_case

    def predict(self, X):
        texts = check_texts(X)
        return np.array([self.detect(t)[0] if t.strip() else UNDETERMINED for t in texts], dtype=object)


_DEFAULT: LanguageDetector | None = None


def detect_language(text: str) -> tuple[str, float]:
    """Detect the language of ``text`` with the bundled profiles."""
    global _DEFAULT
    if _DEFAULT is None:
        _DEFAULT = LanguageDetector.pretrained()
    return _DEFAULT.detect(text)
