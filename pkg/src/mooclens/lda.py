"""Latent Dirichlet allocation by collapsed Gibbs sampling.

Estimates come from the final sample with Dirichlet smoothing::

    phi[k, w]   = (n_kw + beta)  / (n_k + V * beta)
    theta[d, k] = (n_dk + alpha) / (n_d + K * alpha)

Reproducibility: the vocabulary is sorted, documents are visited in a
canonical order (sorted by content, then id) and every uniform comes from
``numpy.random.Generator(PCG64(seed))``. The same documents in any order
therefore give the same counts, with theta rows following their documents.
"""

from __future__ import annotations

import csv
import hashlib
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from . import _gibbs, _io
from ._validation import check_docs, check_positive_float, check_positive_int, check_seed

logger = logging.getLogger(__name__)

FORMAT_VERSION = 1
DEFAULT_BETA = 0.01
DEFAULT_ITERATIONS = 1000
INFER_SWEEPS = 50
INFER_BURN_IN = 10


@dataclass(frozen=True)
class TopicSummary:
    topic_id: int
    top_words: tuple[str, ...]
    probabilities: tuple[float, ...]
    label: str | None = None


@dataclass(eq=False)
class TopicModel:
    """A trained model. ``n_kw``/``n_dk`` are the final-sample count matrices."""

    vocab: tuple[str, ...]
    phi: np.ndarray
    theta: np.ndarray
    alpha: float
    beta: float
    seed: int
    iterations: int
    n_kw: np.ndarray | None = None
    n_dk: np.ndarray | None = None
    doc_ids: tuple[str, ...] | None = None
    labels: tuple[str | None, ...] | None = None
    word_index: dict = field(init=False, repr=False)

    def __post_init__(self):
        self.vocab = tuple(self.vocab)
        self.phi = np.asarray(self.phi, dtype=float)
        self.theta = np.asarray(self.theta, dtype=float).reshape(-1, self.phi.shape[0])
        self.word_index = {w: i for i, w in enumerate(self.vocab)}
        if self.phi.shape != (self.n_topics, len(self.vocab)):
            raise ValueError("phi shape does not match K x V")
        if self.n_topics < 2 or len(self.vocab) < self.n_topics:
            raise ValueError("a topic model needs K >= 2 and V >= K")

    @property
    def n_topics(self) -> int:
        return self.phi.shape[0]

    @property
    def K(self) -> int:  # noqa: N802 - conventional symbol
        return self.n_topics

    def to_dict(self) -> dict:
        def ints(m):
            return None if m is None else np.asarray(m).astype(int).tolist()

        return {
            "format_version": FORMAT_VERSION,
            "kind": "lda",
            "n_topics": self.n_topics,
            "alpha": self.alpha,
            "beta": self.beta,
            "seed": self.seed,
            "iterations": self.iterations,
            "vocab": list(self.vocab),
            "labels": None if self.labels is None else list(self.labels),
            "doc_ids": None if self.doc_ids is None else list(self.doc_ids),
            "phi": self.phi.tolist(),
            "theta": self.theta.tolist(),
            "n_kw": ints(self.n_kw),
            "n_dk": ints(self.n_dk),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "TopicModel":
        version = data.get("format_version")
        if version != FORMAT_VERSION:
            raise ValueError(f"unsupported model format_version {version!r}")

        def arr(key, dtype):
            return None if data.get(key) is None else np.asarray(data[key], dtype=dtype)

        return cls(
            vocab=tuple(data["vocab"]),
            phi=arr("phi", float),
            theta=arr("theta", float) if data.get("theta") else np.zeros((0, data["n_topics"])),
            alpha=float(data["alpha"]),
            beta=float(data["beta"]),
            seed=int(data["seed"]),
            iterations=int(data["iterations"]),
            n_kw=arr("n_kw", np.int64),
            n_dk=arr("n_dk", np.int64),
            doc_ids=None if data.get("doc_ids") is None else tuple(data["doc_ids"]),
            labels=None if data.get("labels") is None else tuple(data["labels"]),
        )

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), separators=(",", ":")) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path) -> "TopicModel":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def _doc_ids(docs) -> list[str | None]:
    return [getattr(d, "review_id", None) for d in docs]


def _canonical_order(token_lists, ids) -> list[int]:
    return sorted(range(len(token_lists)), key=lambda i: (token_lists[i], ids[i] or ""))


def train_lda(docs, n_topics: int, alpha: float | None = None, beta: float = DEFAULT_BETA,
              iterations: int = DEFAULT_ITERATIONS, seed: int = 0) -> TopicModel:
    """Fit LDA on non-empty token documents (lists of words or ``TokenDoc``).

    ``alpha`` defaults to ``50 / n_topics``.
    """
    docs = list(docs)
    token_lists = check_docs(docs)
    n_topics = check_positive_int(n_topics, "n_topics", minimum=2)
    iterations = check_positive_int(iterations, "iterations")
    seed = check_seed(seed, "seed")
    alpha = 50.0 / n_topics if alpha is None else check_positive_float(alpha, "alpha")
    beta = check_positive_float(beta, "beta")
    if not token_lists:
        raise ValueError("cannot train on zero documents")
    for i, toks in enumerate(token_lists):
        if not toks:
            raise ValueError(f"document {i} is empty; filter empty projections before training")
    vocab = sorted({w for toks in token_lists for w in toks})
    if n_topics > len(vocab):
        raise ValueError(f"n_topics={n_topics} exceeds the number of distinct words ({len(vocab)})")
    index = {w: i for i, w in enumerate(vocab)}
    ids = _doc_ids(docs)
    order = _canonical_order(token_lists, ids)

    lengths = np.array([len(token_lists[i]) for i in order], dtype=np.int64)
    doc_ptr = np.zeros(len(order) + 1, dtype=np.int64)
    np.cumsum(lengths, out=doc_ptr[1:])
    words = np.array([index[w] for i in order for w in token_lists[i]], dtype=np.int64)

    rng = np.random.Generator(np.random.PCG64(seed))
    z = rng.integers(0, n_topics, size=words.shape[0]).astype(np.int64)
    n_dk = np.zeros((len(order), n_topics), dtype=np.int64)
    n_kw = np.zeros((n_topics, len(vocab)), dtype=np.int64)
    n_k = np.zeros(n_topics, dtype=np.int64)
    _gibbs.init_counts(doc_ptr, words, z, n_dk, n_kw, n_k)
    for _ in range(iterations):
        _gibbs.sweep(doc_ptr, words, z, n_dk, n_kw, n_k, alpha, beta, rng.random(words.shape[0]))

    phi = (n_kw + beta) / (n_k[:, None] + len(vocab) * beta)
    theta_sorted = (n_dk + alpha) / (lengths[:, None] + n_topics * alpha)
    # back to caller order
    inverse = np.empty(len(order), dtype=np.int64)
    inverse[np.asarray(order)] = np.arange(len(order))
    return TopicModel(
        vocab=tuple(vocab),
        phi=phi,
        theta=theta_sorted[inverse],
        alpha=alpha,
        beta=beta,
        seed=seed,
        iterations=iterations,
        n_kw=n_kw,
        n_dk=n_dk[inverse],
        doc_ids=tuple(i or "" for i in ids) if any(i is not None for i in ids) else None,
    )


def _doc_seed(seed: int, tokens: Sequence[str]) -> list[int]:
    digest = hashlib.sha256("\x1f".join(tokens).encode("utf-8")).digest()
    return [seed, int.from_bytes(digest[:8], "little")]


def in_vocabulary(model: TopicModel, doc) -> list[int]:
    tokens = getattr(doc, "lemmas", doc)
    return [model.word_index[w] for w in tokens if w in model.word_index]


def infer_doc_topics(model: TopicModel, doc, sweeps: int = INFER_SWEEPS, burn_in: int = INFER_BURN_IN) -> np.ndarray:
    """Topic weights of one document by fold-in sampling with ``phi`` frozen.

    The stream is seeded from the model seed and the document's content, so
    a document gets the same weights wherever it appears. A document with no
    in-vocabulary word gets the uniform vector (logged at debug level).
    """
    if burn_in >= sweeps:
        raise ValueError("burn_in must be smaller than sweeps")
    tokens = list(getattr(doc, "lemmas", doc))
    idx = in_vocabulary(model, tokens)
    k = model.n_topics
    if not idx:
        logger.debug("document without in-vocabulary words; uniform topic weights")
        return np.full(k, 1.0 / k)
    words = np.array(idx, dtype=np.int64)
    rng = np.random.Generator(np.random.PCG64(_doc_seed(model.seed, tokens)))
    z = rng.integers(0, k, size=words.shape[0]).astype(np.int64)
    weights = _gibbs.fold_in(words, z, model.phi, model.alpha, rng.random(sweeps * words.shape[0]), sweeps, burn_in)
    return weights / weights.sum()


def infer_topics(model: TopicModel, docs, **kwargs) -> np.ndarray:
    rows = [infer_doc_topics(model, d, **kwargs) for d in docs]
    return np.vstack(rows) if rows else np.zeros((0, model.n_topics))


def top_words(model: TopicModel, n: int = 10) -> list[TopicSummary]:
    """``n`` most probable words per topic; equal probabilities in word order."""
    n = check_positive_int(n, "n")
    if n > len(model.vocab):
        raise ValueError(f"n={n} exceeds the vocabulary size {len(model.vocab)}")
    out = []
    for k in range(model.n_topics):
        row = model.phi[k]
        ranked = sorted(range(len(model.vocab)), key=lambda i: (-row[i], model.vocab[i]))[:n]
        label = model.labels[k] if model.labels else None
        out.append(TopicSummary(k, tuple(model.vocab[i] for i in ranked), tuple(float(row[i]) for i in ranked), label))
    return out


def proportions_from_weights(weights) -> np.ndarray:
    """Percentage share of each topic: column means of ``weights`` times 100."""
    weights = np.asarray(weights, dtype=float)
    if weights.ndim != 2 or weights.shape[0] == 0:
        raise ValueError("need at least one document to compute topic proportions")
    return weights.sum(axis=0) / weights.shape[0] * 100.0


def topic_proportions(model: TopicModel, docs, include_empty: bool = False) -> np.ndarray:
    """Corpus-level topic percentages over ``docs`` (sums to 100).

    Documents without in-vocabulary words are left out of the average unless
    ``include_empty`` is set, in which case they count with uniform weights.
    """
    docs = list(docs)
    kept = docs if include_empty else [d for d in docs if in_vocabulary(model, d)]
    if len(kept) < len(docs):
        logger.info("%d empty document(s) excluded from topic proportions", len(docs) - len(kept))
    return proportions_from_weights(infer_topics(model, kept))


def write_topic_summary(path, summaries: Sequence[TopicSummary]) -> None:
    rows = [
        (s.topic_id, rank, word, prob)
        for s in summaries
        for rank, (word, prob) in enumerate(zip(s.top_words, s.probabilities), start=1)
    ]
    _io.write_csv(path, ["topic_id", "rank", "word", "probability"], rows)


def read_topic_labels(path) -> dict[int, str]:
    """``topic_id,label`` CSV written by an analyst after reading the summaries."""
    with open(path, encoding="utf-8", newline="") as fh:
        return {int(row["topic_id"]): row["label"] for row in csv.DictReader(fh) if row.get("label")}


def with_labels(model: TopicModel, labels: dict[int, str]) -> TopicModel:
    bad = [k for k in labels if not 0 <= k < model.n_topics]
    if bad:
        raise ValueError(f"labels for unknown topic ids {bad}")
    model.labels = tuple(labels.get(k) for k in range(model.n_topics))
    return model


class GibbsLDA(TransformerMixin, BaseEstimator):
    """Estimator wrapper: ``fit`` trains, ``transform`` returns fold-in topic weights."""

    def __init__(self, n_topics=10, alpha=None, beta=DEFAULT_BETA, n_iter=DEFAULT_ITERATIONS, random_state=0,
                 infer_sweeps=INFER_SWEEPS, infer_burn_in=INFER_BURN_IN):
        self.n_topics = n_topics
        self.alpha = alpha
        self.beta = beta
        self.n_iter = n_iter
        self.random_state = random_state
        self.infer_sweeps = infer_sweeps
        self.infer_burn_in = infer_burn_in

    def fit(self, X, y=None):
        self.model_ = train_lda(X, self.n_topics, self.alpha, self.beta, self.n_iter, self.random_state)
        self.components_ = self.model_.phi
        self.vocabulary_ = self.model_.word_index
        return self

    def transform(self, X):
        check_is_fitted(self, "model_")
        check_docs(X)
        return infer_topics(self.model_, X, sweeps=self.infer_sweeps, burn_in=self.infer_burn_in)

    def proportions(self, X, include_empty=False):
        check_is_fitted(self, "model_")
        return topic_proportions(self.model_, X, include_empty=include_empty)

    def top_words(self, n=10):
        check_is_fitted(self, "model_")
        return top_words(self.model_, n)
