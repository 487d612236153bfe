"""Regenerate the bundled 100-review fixture (deterministic)."""

from mooclens._io import fixture_path, write_jsonl
from mooclens.corpus import save_corpus
from mooclens.synth import build_review_fixture


def main():
    corpus = build_review_fixture(n_reviews=100, n_courses=10, n_spanish=10, seed=7)
    save_corpus(corpus, fixture_path("sample_100.jsonl"), fixture_path("sample_100.courses.jsonl"))
    # stand-in for an external classifier: label follows the star rating
    labels = [
        {"review_id": r.review_id, "label": "Positive" if r.rating >= 4.0 else "Negative" if r.rating <= 2.5 else "Neutral"}
        for r in corpus.reviews
    ]
    write_jsonl(fixture_path("sample_100.labels.jsonl"), labels)
    print(f"wrote {len(corpus)} reviews, {len(corpus.courses)} courses")


if __name__ == "__main__":
    main()
