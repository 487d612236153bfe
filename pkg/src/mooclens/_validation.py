"""Input checks used by the estimators, in the spirit of ``sklearn.utils.validation``."""

from __future__ import annotations

import numbers

import numpy as np


def check_docs(docs, *, allow_empty_docs=True, name="docs"):
    """Validate a collection of token documents and return it as a list of lists.

    Accepts any iterable of iterables of strings (including ``TokenDoc``
    objects, whose ``lemmas`` are used). Raw strings are rejected because a
    string is itself an iterable of characters, which is never what the
    caller meant.
    """
    if isinstance(docs, str):
        raise TypeError(f"{name} must be a sequence of token lists, got a string")
    out = []
    for i, doc in enumerate(docs):
        doc = getattr(doc, "lemmas", doc)
        if isinstance(doc, str):
            raise TypeError(f"{name}[{i}] is a string; expected a list of tokens")
        tokens = list(doc)
        for tok in tokens:
            if not isinstance(tok, str):
                raise TypeError(f"{name}[{i}] contains a non-string token {tok!r}")
        if not tokens and not allow_empty_docs:
            raise ValueError(f"{name}[{i}] is empty")
        out.append(tokens)
    return out


def check_texts(texts, name="X"):
    if isinstance(texts, str):
        raise TypeError(f"{name} must be a sequence of strings, got a single string")
    out = list(texts)
    for i, t in enumerate(out):
        if not isinstance(t, str):
            raise TypeError(f"{name}[{i}] is {type(t).__name__}, expected str")
    return out


def check_positive_int(value, name, minimum=1):
    if isinstance(value, bool) or not isinstance(value, numbers.Integral):
        raise TypeError(f"{name} must be an integer, got {value!r}")
    if value < minimum:
        raise ValueError(f"{name} must be >= {minimum}, got {value}")
    return int(value)


def check_positive_float(value, name):
    if isinstance(value, bool) or not isinstance(value, numbers.Real):
        raise TypeError(f"{name} must be a real number, got {value!r}")
    if not np.isfinite(value) or value <= 0:
        raise ValueError(f"{name} must be a positive finite number, got {value}")
    return float(value)


def check_seed(seed, name="random_state"):
    """Seeds are plain non-negative integers so they can be written to manifests."""
    if isinstance(seed, bool) or not isinstance(seed, numbers.Integral) or seed < 0:
        raise TypeError(f"{name} must be a non-negative integer, got {seed!r}")
    return int(seed)


def check_probability_vector(p, name, atol=1e-9):
    p = np.asarray(p, dtype=float)
    if p.ndim != 1 or p.size == 0:
        raise ValueError(f"{name} must be a non-empty 1-d vector")
    if np.any(p < 0) or not np.isfinite(p).all():
        raise ValueError(f"{name} has negative or non-finite entries")
    if abs(p.sum() - 1.0) > atol:
        raise ValueError(f"{name} must sum to 1 (got {p.sum()!r})")
    return p


def check_row_stochastic(m, name, atol=1e-9):
    m = np.asarray(m, dtype=float)
    if m.ndim != 2:
        raise ValueError(f"{name} must be 2-d")
    if np.any(m < 0):
        raise ValueError(f"{name} has negative entries")
    if m.shape[0] and np.max(np.abs(m.sum(axis=1) - 1.0)) > atol:
        raise ValueError(f"rows of {name} must sum to 1")
    return m
