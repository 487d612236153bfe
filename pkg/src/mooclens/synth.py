"""Synthetic corpora with planted structure, used as test oracles.

``generate_corpus`` follows the LDA generative story: topic-word rows from
Dirichlet(beta), document-topic rows from Dirichlet(alpha), then each token
picks a topic and a word. Ratings are allocated to hit ``rating_mix``
exactly (largest remainder) and then shuffled.

``build_review_fixture`` and ``build_four_course_fixture`` produce small
English-looking review corpora over the bundled category lexicon for the
end-to-end pipeline.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from ._lemmatizer import Lemmatizer
from ._validation import check_positive_int, check_probability_vector, check_seed
from .corpus import RATINGS, Corpus, Course, Review
from .textprep import load_stopwords

DEFAULT_RATING_MIX = {
    5.0: 0.63, 4.5: 0.10, 4.0: 0.115, 3.5: 0.04, 3.0: 0.05, 2.5: 0.015, 2.0: 0.02, 1.5: 0.01, 1.0: 0.02,
}
_CONSONANTS = "bdfgklmnprtvz"
_VOWELS = "aiou"


@dataclass(frozen=True)
class PlantedSpec:
    n_topics: int = 5
    vocab_size: int = 200
    n_docs: int = 2000
    doc_len: int = 60
    alpha: float = 0.1
    beta: float = 0.01
    rating_mix: dict = field(default_factory=lambda: dict(DEFAULT_RATING_MIX))
    seed: int = 42
    n_courses: int = 20

    def __post_init__(self):
        check_positive_int(self.n_topics, "n_topics")
        check_positive_int(self.vocab_size, "vocab_size")
        check_positive_int(self.n_docs, "n_docs", minimum=0)
        check_positive_int(self.doc_len, "doc_len")
        check_positive_int(self.n_courses, "n_courses")
        check_seed(self.seed, "seed")
        if self.alpha <= 0 or self.beta <= 0:
            raise ValueError("alpha and beta must be positive")
        mix = {float(k): float(v) for k, v in self.rating_mix.items()}
        for r in mix:
            if r not in RATINGS:
                raise ValueError(f"rating bucket {r} is not a half-star value in [1, 5]")
        check_probability_vector(list(mix.values()), "rating_mix")
        object.__setattr__(self, "rating_mix", mix)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["rating_mix"] = {str(k): v for k, v in self.rating_mix.items()}
        return d

    @classmethod
    def from_dict(cls, data: dict) -> "PlantedSpec":
        data = dict(data)
        if "rating_mix" in data:
            data["rating_mix"] = {float(k): float(v) for k, v in data["rating_mix"].items()}
        return cls(**data)


def pseudo_words(n: int) -> list[str]:
    """``n`` distinct lowercase pseudo-words that survive cleaning and lemmatization.

    Words alternate consonant/vowel and end in a vowel, so no inflection
    rule applies to them.
    """
    taken = set(Lemmatizer.bundled().irregular) | load_stopwords()
    out = []
    for n_syll in itertools.count(2):
        for combo in itertools.product(*[[c + v for c in _CONSONANTS for v in _VOWELS]] * n_syll):
            word = "".join(combo)
            if word in taken:
                continue
            out.append(word)
            if len(out) == n:
                return out
    raise AssertionError("unreachable")


def allocate_counts(mix: dict, total: int) -> dict:
    """Integer counts per bucket summing to ``total`` (largest remainder)."""
    keys = sorted(mix, reverse=True)
    raw = {k: mix[k] * total for k in keys}
    counts = {k: math.floor(raw[k] + 1e-9) for k in keys}
    short = total - sum(counts.values())
    by_remainder = sorted(keys, key=lambda k: (-(raw[k] - counts[k]), -k))
    for k in by_remainder[:short]:
        counts[k] += 1
    return counts


def _ratings(mix: dict, total: int, rng: np.random.Generator) -> list[float]:
    counts = allocate_counts(mix, total)
    values = [k for k in sorted(counts, reverse=True) for _ in range(counts[k])]
    order = rng.permutation(total)
    return [values[i] for i in order]


def generate_corpus(spec: PlantedSpec):
    """Return ``(corpus, true_phi, true_theta, vocab)`` for ``spec``."""
    rng = np.random.Generator(np.random.PCG64(spec.seed))
    k, v = spec.n_topics, spec.vocab_size
    vocab = pseudo_words(v)
    phi = rng.dirichlet(np.full(v, spec.beta), size=k)
    theta = rng.dirichlet(np.full(k, spec.alpha), size=spec.n_docs) if spec.n_docs else np.zeros((0, k))
    cum_phi = np.cumsum(phi, axis=1)
    cum_theta = np.cumsum(theta, axis=1)
    ratings = _ratings(spec.rating_mix, spec.n_docs, rng)
    n_courses = min(spec.n_courses, max(spec.n_docs, 1))
    courses = [Course(f"c{j:03d}", f"Synthetic course {j}") for j in range(n_courses)]
    reviews = []
    for d in range(spec.n_docs):
        zs = np.minimum((rng.random(spec.doc_len)[:, None] > cum_theta[d]).sum(axis=1), k - 1)
        ws = np.minimum((rng.random(spec.doc_len)[:, None] > cum_phi[zs]).sum(axis=1), v - 1)
        reviews.append(
            Review(f"r{d:06d}", courses[d % n_courses].course_id, ratings[d], " ".join(vocab[w] for w in ws),
                   language="en")
        )
    return Corpus.from_records(reviews, courses), phi, theta, vocab


def save_planted(path, spec: PlantedSpec, phi, theta, vocab) -> None:
    payload = {"spec": spec.to_dict(), "vocab": list(vocab), "phi": np.asarray(phi).tolist(),
               "theta": np.asarray(theta).tolist()}
    Path(path).write_text(json.dumps(payload, separators=(",", ":")) + "\n", encoding="utf-8")


def load_planted(path):
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    return PlantedSpec.from_dict(data["spec"]), np.asarray(data["phi"]), np.asarray(data["theta"]), data["vocab"]


def phi_on_vocab(model, vocab) -> np.ndarray:
    """Learned ``phi`` re-indexed onto ``vocab``; words the model never saw get 0."""
    out = np.zeros((model.n_topics, len(vocab)))
    for j, w in enumerate(vocab):
        i = model.word_index.get(w)
        if i is not None:
            out[:, j] = model.phi[:, i]
    return out


def _cosines(a, b) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ValueError("learned and true phi must have the same shape")
    na = np.linalg.norm(a, axis=1)
    nb = np.linalg.norm(b, axis=1)
    return (b @ a.T) / np.outer(nb, na)


def match_topics(learned_phi, true_phi, exhaustive: bool = False):
    """Match each true topic to one learned topic by cosine similarity.

    Returns ``(assignment, mean_cosine)`` where ``assignment[t]`` is the
    learned topic matched to true topic ``t``. Greedy by default (highest
    remaining pair first); ``exhaustive`` tries every permutation (K <= 8).
    """
    sim = _cosines(learned_phi, true_phi)  # rows: true, cols: learned
    k = sim.shape[0]
    if exhaustive:
        if k > 8:
            raise ValueError("exhaustive matching is limited to K <= 8")
        best = max(itertools.permutations(range(k)), key=lambda p: sum(sim[t, p[t]] for t in range(k)))
        assignment = np.array(best)
    else:
        assignment = np.full(k, -1)
        pairs = sorted(((sim[t, j], t, j) for t in range(k) for j in range(k)), key=lambda x: (-x[0], x[1], x[2]))
        used = set()
        for _, t, j in pairs:
            if assignment[t] < 0 and j not in used:
                assignment[t] = j
                used.add(j)
    return assignment, float(np.mean(sim[np.arange(k), assignment]))


# ---------------------------------------------------------------------------
# review-like fixtures over the bundled lexicon

_THEMES = {
    "health": ["health", "nutrition", "diet", "body", "exercise", "food", "yoga", "meditation", "sleep", "weight"],
    "programming": ["python", "code", "programming", "function", "variable", "loop", "database", "sql", "web", "app"],
    "finance": ["finance", "market", "trading", "stock", "investment", "invest", "business", "marketing"],
    "language": ["spanish", "grammar", "vocabulary", "pronunciation", "speak", "accent", "conversation", "word"],
    "art": ["draw", "art", "paint", "color", "drawing", "painting", "design", "photography", "camera"],
}
_PRAISE = ["clear", "helpful", "detailed", "practical", "easy", "engaging", "useful", "interesting", "informative",
           "fun", "structured", "organized"]
_CRITIQUE = ["boring", "slow", "hard", "repetitive", "outdated", "basic", "short", "long"]

_EN_OPENERS = {
    "high": ["I really loved this course and I would recommend it to everyone.",
             "Excellent course, the best one I have taken so far!",
             "Great experience, thank you so much for this amazing class."],
    "mid": ["It was an okay course overall, with some good parts.",
            "Decent material, although I expected a little more from it."],
    "low": ["Honestly this was a waste of time and very disappointing.",
            "I did not like this course and would not recommend it."],
}
_EN_BODY = [
    "The lessons about {c1} and {c2} were {q1} and {q2}, and the teacher explained every {c3} topic with a {q3} example.",
    "I think the {c1} part was {q1} but the section on {c2} felt {q2}; the {c3} exercises were {q3} too.",
    "This class on {c1} is {q1}. The explanation of {c2} was {q2} and the {c3} projects were {q3}.",
]
_ES_TEXTS = [
    "El curso de {c} es muy bueno y el profesor explica todo con mucha claridad. Lo recomiendo a todos.",
    "Me gustó mucho este curso, aunque algunas lecciones son un poco lentas y largas para mi gusto.",
]


def _bucket(rating: float) -> str:
    return "high" if rating >= 4.5 else "mid" if rating >= 3.0 else "low"


def _en_review(rng, theme_words, rating) -> str:
    c = [theme_words[i] for i in rng.choice(len(theme_words), size=3, replace=False)]
    good = rating >= 3.5
    pool = _PRAISE if good else _CRITIQUE
    q = [pool[i] for i in rng.choice(len(pool), size=3, replace=False)]
    opener = _EN_OPENERS[_bucket(rating)][int(rng.integers(len(_EN_OPENERS[_bucket(rating)])))]
    body = _EN_BODY[int(rng.integers(len(_EN_BODY)))].format(c1=c[0], c2=c[1], c3=c[2], q1=q[0], q2=q[1], q3=q[2])
    return f"{opener} {body}"


POOR_RATING_MIX = {3.0: 0.15, 2.5: 0.2, 2.0: 0.25, 1.5: 0.15, 1.0: 0.25}


def build_review_fixture(n_reviews: int = 100, n_courses: int = 10, n_spanish: int = 10, seed: int = 7,
                         rating_mix: dict | None = None, n_poor_courses: int = 4) -> Corpus:
    """Small English/Spanish review corpus with theme-specific content words.

    Each course is tied to one theme. The last ``n_poor_courses`` courses
    draw ratings from a low mix (and critical wording), the rest from
    ``rating_mix``. Spanish reviews carry no language tag so the detector
    has to find them.
    """
    rng = np.random.Generator(np.random.PCG64(seed))
    themes = list(_THEMES)
    courses = [
        Course(f"course-{j:02d}", f"{themes[j % len(themes)].title()} course {j}", url=f"https://example.org/c/{j}",
               platform=("udemy", "coursera", "domestika")[j % 3], category=themes[j % len(themes)],
               teacher=f"Teacher {j}")
        for j in range(n_courses)
    ]
    poor = {c.course_id for c in courses[n_courses - n_poor_courses:]} if n_poor_courses else set()
    slots = {"good": [i for i in range(n_reviews) if courses[i % n_courses].course_id not in poor]}
    slots["poor"] = [i for i in range(n_reviews) if courses[i % n_courses].course_id in poor]
    ratings = [0.0] * n_reviews
    for kind, mix in (("good", rating_mix or DEFAULT_RATING_MIX), ("poor", POOR_RATING_MIX)):
        for i, r in zip(slots[kind], _ratings(mix, len(slots[kind]), rng)):
            ratings[i] = r
    spanish = set(rng.choice(n_reviews, size=n_spanish, replace=False).tolist()) if n_spanish else set()
    reviews = []
    for i in range(n_reviews):
        course = courses[i % n_courses]
        if i in spanish:
            template = _ES_TEXTS[int(rng.integers(len(_ES_TEXTS)))]
            text = template.format(c=_THEMES[course.category][0])
        else:
            text = _en_review(rng, _THEMES[course.category], ratings[i])
        reviews.append(
            Review(f"rev-{i:04d}", course.course_id, ratings[i], text, platform=course.platform,
                   username=f"user{int(rng.integers(1000)):03d}", url=course.url)
        )
    return Corpus.from_records(reviews, courses)


def build_four_course_fixture(seed: int = 11, reviews_per_course: int = 30) -> Corpus:
    """Four courses with distinct themes and rating levels, for report examples."""
    rng = np.random.Generator(np.random.PCG64(seed))
    setup = [("health", 4.7), ("programming", 4.4), ("finance", 3.6), ("art", 2.6)]
    courses, reviews = [], []
    for j, (theme, target) in enumerate(setup):
        course = Course(f"four-{j}", f"{theme.title()} essentials", category=theme, teacher=f"Teacher {theme}")
        courses.append(course)
        for i in range(reviews_per_course):
            rating = float(np.clip(round((target + rng.normal(0, 0.6)) * 2) / 2, 1.0, 5.0))
            reviews.append(
                Review(f"four-{j}-{i:03d}", course.course_id, rating, _en_review(rng, _THEMES[theme], rating),
                       language="en")
            )
    return Corpus.from_records(reviews, courses)
