"""Deterministic rule lemmatizer.

Lookup order for a lowercase token:

1. the irregular table (``was -> be``, ``taught -> teach``, ``better -> good``),
2. a coarse part of speech guessed from the suffix and refined with a
   one-tag-per-word lexicon (``-ing``/``-ed`` -> verb, ``-s`` -> noun,
   ``-er``/``-est`` -> adjective; words the lexicon tags ``JJ`` keep their
   participle form, e.g. ``boring``, ``detailed``),
3. candidate base forms generated by suffix rules for that part of speech;
   the first candidate found in the base-form vocabulary wins.

A token with no accepted candidate is returned unchanged.
"""

from __future__ import annotations

import functools
import re

from . import _io

INFLECTED_TAGS = frozenset({"NNS", "NNPS", "NNP", "VBD", "VBN", "VBG", "VBZ", "JJR", "JJS", "RBR", "RBS"})
_VOWELS = set("aeiou")
_VOWEL_GROUPS = re.compile(r"[aeiouy]+")


def _short_cvc(stem: str) -> bool:
    """One-syllable stem ending consonant-vowel-consonant (``cod``, ``us``, ``rat``).

    Such stems usually lost a silent ``e`` before the suffix: ``coding`` ->
    ``code``, ``used`` -> ``use``.
    """
    if len(stem) < 2 or stem[-1] in _VOWELS or stem[-1] in "wxy" or stem[-2] not in _VOWELS:
        return False
    if len(stem) >= 3 and stem[-3] in _VOWELS:
        return False
    return len(_VOWEL_GROUPS.findall(stem)) == 1


def _undouble(stem: str) -> str | None:
    if len(stem) >= 3 and stem[-1] == stem[-2] and stem[-1] not in _VOWELS and stem[-1] not in "lsz":
        return stem[:-1]
    return None


class Lemmatizer:
    def __init__(self, irregular: dict[str, str], tags: dict[str, str], extra_base=()):
        self.irregular = dict(irregular)
        self.tags = dict(tags)
        self.base = {w for w, t in self.tags.items() if t not in INFLECTED_TAGS}
        self.base.update(self.irregular.values())
        self.base.update(extra_base)

    @classmethod
    @functools.lru_cache(maxsize=1)
    def bundled(cls) -> "Lemmatizer":
        irregular = dict(line.split("\t") for line in _io.read_text_lines(_io.data_path("irregular.tsv")))
        tags = dict(line.split("\t") for line in _io.read_text_lines(_io.data_path("wordtags.tsv.gz")))
        return cls(irregular, tags)

    def _first_known(self, candidates, prefer: str | None = None) -> str | None:
        known = [c for c in candidates if c and len(c) >= 2 and c in self.base]
        if prefer is not None:
            # passed -> pass, not the adjective passe
            for cand in known:
                if self.tags.get(cand, "").startswith(prefer):
                    return cand
        return known[0] if known else None

    def _verb(self, word: str, suffix: str) -> str | None:
        stem = word[: -len(suffix)]
        if suffix == "ed" and word.endswith("ied"):
            return self._first_known([word[:-3] + "y", word[:-1]], "VB")
        if suffix == "ing" and word.endswith("ying") and len(word) > 5:
            return self._first_known([stem, word[:-4] + "ie"], "VB")
        if suffix == "ed" or _short_cvc(stem):
            # -ed on an e-final base only adds "d": hated -> hate, not hat
            order = [stem + "e", stem, _undouble(stem)]
        else:
            order = [stem, _undouble(stem), stem + "e"]
        return self._first_known(order, "VB")

    def _noun(self, word: str) -> str | None:
        order = []
        if word.endswith("ies") and len(word) > 4:
            order.append(word[:-3] + "y")
        if word.endswith("ves"):
            order += [word[:-3] + "fe", word[:-3] + "f"]
        order.append(word[:-1])
        if word.endswith("es"):
            order.append(word[:-2])
        return self._first_known(order)

    def _adjective(self, word: str) -> str | None:
        suffix = "est" if word.endswith("est") else "er"
        stem = word[: -len(suffix)]
        order = []
        if stem.endswith("i"):
            order.append(stem[:-1] + "y")
        order += [stem, _undouble(stem), stem + "e"]
        return self._first_known(order)

    def lemma(self, word: str) -> str:
        if word in self.irregular:
            return self.irregular[word]
        tag = self.tags.get(word)
        n = len(word)
        if word.endswith("ing") and n > 4:
            if tag == "JJ":
                return word
            return self._verb(word, "ing") or word
        if word.endswith("ed") and n > 3:
            if tag == "JJ":
                return word
            return self._verb(word, "ed") or word
        if word.endswith("s") and n > 3 and not word.endswith(("ss", "us", "is")):
            if tag is not None and tag not in INFLECTED_TAGS:
                return word
            if tag == "VBZ":
                return self._verb(word, "s") or self._noun(word) or word
            return self._noun(word) or word
        if word.endswith(("er", "est")) and n > 4:
            if tag in ("JJR", "JJS", "RBR", "RBS"):
                return self._adjective(word) or word
            if tag is None:
                cand = self._adjective(word)
                if cand is not None and self.tags.get(cand) == "JJ":
                    return cand
        return word
