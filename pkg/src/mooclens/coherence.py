"""Topic coherence (C_umass, C_v) and a topic-count sweep.

C_umass
    document co-occurrence, one-preceding segmentation: for a topic's words
    ``w_0 .. w_{n-1}`` average ``log((D(w_i, w_j) + eps) / D(w_j))`` over
    ``i > j``.
C_v
    boolean sliding windows (a document no longer than the window is a
    single window), NPMI between word pairs, one-set segmentation: each
    word's NPMI vector against the topic set is compared by cosine with the
    sum of all those vectors.

A topic's score is the mean over its pairs (C_umass) or words (C_v); a
model's score is the mean over topics. Words that never occur are skipped
and logged.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import _io
from ._validation import check_docs, check_positive_int, check_seed
from .lda import train_lda, top_words

logger = logging.getLogger(__name__)

EPSILON = 1e-12
WINDOW = 110
TOP_N = 10


def _presence(units: list[list[str]], words: list[str]) -> np.ndarray:
    """Boolean unit x word matrix: does ``words[j]`` occur in ``units[i]``."""
    index = {w: j for j, w in enumerate(words)}
    m = np.zeros((len(units), len(words)), dtype=np.float64)
    for i, unit in enumerate(units):
        for w in set(unit):
            j = index.get(w)
            if j is not None:
                m[i, j] = 1.0
    return m


def _union(topics: Sequence[Sequence[str]]) -> list[str]:
    return sorted({w for t in topics for w in t})


def _mean(values) -> float:
    values = [v for v in values if not math.isnan(v)]
    return math.fsum(values) / len(values) if values else float("nan")


def umass_topic_scores(topics, docs, epsilon: float = EPSILON) -> list[float]:
    topics = [list(t) for t in topics]
    docs = check_docs(docs)
    words = _union(topics)
    pres = _presence(docs, words)
    co = pres.T @ pres
    idx = {w: j for j, w in enumerate(words)}
    scores = []
    for t, topic in enumerate(topics):
        present = [w for w in topic if co[idx[w], idx[w]] > 0]
        if len(present) < len(topic):
            logger.warning("topic %d: skipping word(s) absent from the corpus: %s", t,
                           [w for w in topic if w not in present])
        pairs = [
            math.log((co[idx[present[i]], idx[present[j]]] + epsilon) / co[idx[present[j]], idx[present[j]]])
            for i in range(1, len(present))
            for j in range(i)
        ]
        scores.append(_mean(pairs))
    return scores


def coherence_umass(topics, docs, epsilon: float = EPSILON) -> float:
    """Model C_umass: mean of per-topic scores (``nan`` if no topic is scorable)."""
    return _mean(umass_topic_scores(topics, docs, epsilon))


def sliding_windows(doc: Sequence[str], window: int) -> list[Sequence[str]]:
    if len(doc) <= window:
        return [doc]
    return [doc[i : i + window] for i in range(len(doc) - window + 1)]


def _npmi(p_ij, p_i, p_j, epsilon):
    return math.log((p_ij + epsilon) / (p_i * p_j)) / -math.log(p_ij + epsilon)


def cv_topic_scores(topics, docs, window: int = WINDOW, epsilon: float = EPSILON) -> list[float]:
    window = check_positive_int(window, "window", minimum=2)
    topics = [list(t) for t in topics]
    docs = check_docs(docs)
    words = _union(topics)
    units = [w for doc in docs if doc for w in sliding_windows(doc, window)]
    pres = _presence(units, words)
    co = pres.T @ pres
    n_windows = max(len(units), 1)
    idx = {w: j for j, w in enumerate(words)}
    scores = []
    for t, topic in enumerate(topics):
        present = [w for w in topic if co[idx[w], idx[w]] > 0]
        if len(present) < len(topic):
            logger.warning("topic %d: skipping word(s) in no window: %s", t, [w for w in topic if w not in present])
        if not present:
            scores.append(float("nan"))
            continue
        p = {w: co[idx[w], idx[w]] / n_windows for w in present}
        vectors = np.array(
            [[_npmi(co[idx[a], idx[b]] / n_windows, p[a], p[b], epsilon) for b in present] for a in present]
        )
        total = vectors.sum(axis=0)
        sims = []
        for vec in vectors:
            denom = np.linalg.norm(vec) * np.linalg.norm(total)
            sims.append(float(vec @ total / denom) if denom > 0 else 0.0)
        scores.append(_mean(sims))
    return scores


def coherence_cv(topics, docs, window: int = WINDOW, epsilon: float = EPSILON) -> float:
    """Model C_v in [-1, 1]: mean of per-topic scores."""
    return _mean(cv_topic_scores(topics, docs, window, epsilon))


@dataclass
class CoherenceReport:
    entries: list[tuple[int, float, float]]
    recommended_k: int | None
    failures: dict[int, str] = field(default_factory=dict)

    def rows(self):
        return [(k, cv, um, k == self.recommended_k) for k, cv, um in self.entries]

    def to_csv(self, path) -> None:
        _io.write_csv(path, ["k", "c_v", "c_umass", "recommended"], self.rows())

    def to_csv_string(self) -> str:
        return _io.csv_string(["k", "c_v", "c_umass", "recommended"], self.rows())


def seed_for_k(base_seed: int, k: int) -> int:
    return int(np.random.SeedSequence([base_seed, k]).generate_state(1, dtype=np.uint32)[0])


def sweep_topic_count(docs, k_min: int = 2, k_max: int = 10, step: int = 1, alpha: float | None = None,
                      beta: float = 0.01, iterations: int = 1000, seed: int = 0, top_n: int = TOP_N,
                      window: int = WINDOW, epsilon: float = EPSILON) -> CoherenceReport:
    """Train one model per K in ``range(k_min, k_max + 1, step)`` and score it.

    The recommendation maximizes C_v (smallest K on ties). A K whose training
    fails is recorded in ``failures`` and skipped.
    """
    k_min = check_positive_int(k_min, "k_min", minimum=2)
    k_max = check_positive_int(k_max, "k_max", minimum=k_min)
    step = check_positive_int(step, "step")
    seed = check_seed(seed, "seed")
    docs = check_docs(docs)
    entries, failures = [], {}
    for k in range(k_min, k_max + 1, step):
        try:
            model = train_lda(docs, k, alpha=alpha, beta=beta, iterations=iterations, seed=seed_for_k(seed, k))
        except ValueError as exc:
            logger.warning("K=%d failed: %s", k, exc)
            failures[k] = str(exc)
            continue
        topics = [s.top_words for s in top_words(model, min(top_n, len(model.vocab)))]
        entries.append((k, coherence_cv(topics, docs, window, epsilon), coherence_umass(topics, docs, epsilon)))
        logger.info("K=%d c_v=%.4f c_umass=%.4f", k, entries[-1][1], entries[-1][2])
    scorable = [e for e in entries if not math.isnan(e[1])]
    recommended = max(scorable, key=lambda e: (e[1], -e[0]))[0] if scorable else None
    return CoherenceReport(entries, recommended, failures)
