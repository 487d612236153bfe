"""Command line front end: one subcommand per pipeline stage.

Every stage reads its inputs from, and writes its outputs to, the run's
output directory (``run.output_dir``) as plain JSONL/CSV/JSON, and leaves a
manifest in ``manifests/<stage>.json`` with the effective config, its
digest, the seeds and the SHA-256 of every input and output.

Exit codes: 0 success, 1 stage failure (or failed ``--verify``), 2 invalid
configuration or usage.
"""

from __future__ import annotations

import argparse
import datetime as dt
import json
import logging
import os
import sys
import time
from contextlib import contextmanager
from pathlib import Path

import numpy as np

from . import __version__, _io
from .characterize import build_profiles, emit_report, write_plot_data
from .coherence import sweep_topic_count
from .config import ConfigError, RunConfig, load_config
from .corpus import (
    CorpusError,
    corpus_summary,
    ensure_dir,
    filter_language,
    filter_min_reviews,
    load_corpus,
    save_corpus,
    write_rejects,
)
from .lda import TopicModel, read_topic_labels, top_words, train_lda, with_labels, write_topic_summary
from .sentiment import (
    PolarityLexicon,
    PolarityScorer,
    UndefinedCorrelationError,
    ValenceLexicon,
    ValenceRuleScorer,
    aggregate_course_sentiment,
    correlate_sentiment_rating,
    import_external_labels,
    read_scores,
    score_corpus,
    write_scores,
)
from .stats import (
    course_mean_distribution,
    grouped_matrix,
    manova_pillai,
    permutation_test,
    rating_histogram,
    topic_distribution_by_sentiment,
    write_binned,
    write_histogram,
)
from .synth import PlantedSpec, build_four_course_fixture, build_review_fixture, generate_corpus, save_planted
from .textprep import (
    Category,
    CategoryLexicon,
    TextPreprocessor,
    TokenDoc,
    load_stopwords,
    preprocess_corpus,
    project_vocabulary,
    read_token_docs,
    write_token_docs,
)

logger = logging.getLogger("mooclens")

STAGES = ("ingest", "preprocess", "sentiment", "lda-train", "coherence-sweep", "stats", "characterize", "synth")
CORPUS = "corpus.jsonl"
COURSES = "corpus.courses.jsonl"
REJECTS = "corpus.rejects.jsonl"
TOKENS = "tokens.jsonl"
SENTIMENT = "sentiment.jsonl"
DOCS = {"qual": "qual_docs.jsonl", "content": "content_docs.jsonl"}
MODEL = {"qual": "model_qual.json", "content": "model_content.json"}


class StageError(RuntimeError):
    pass


class Run:
    """Bookkeeping for one stage execution: inputs, outputs and the manifest."""

    def __init__(self, stage: str, config: RunConfig):
        self.stage = stage
        self.config = config
        self.out = ensure_dir(config.output_dir)
        self.started = dt.datetime.now(dt.timezone.utc).replace(microsecond=0)
        self.inputs: dict[str, str] = {}
        self.outputs: list[Path] = []
        self.seeds: dict[str, int] = {}
        self.notes: dict = {}

    def path(self, name: str) -> Path:
        return self.out / name

    def need(self, name: str, producer: str) -> Path:
        p = self.path(name)
        if not p.is_file():
            raise StageError(f"{p} not found; run `mooclens {producer}` first")
        self.add_input(p)
        return p

    def add_input(self, p: Path) -> Path:
        self.inputs[str(Path(p).resolve())] = _io.sha256_file(p)
        return p

    def wrote(self, *paths) -> None:
        self.outputs.extend(Path(p) for p in paths)

    def timestamp(self) -> str:
        epoch = os.environ.get("SOURCE_DATE_EPOCH")
        when = dt.datetime.fromtimestamp(int(epoch), dt.timezone.utc) if epoch else self.started
        return when.isoformat()

    def write_manifest(self) -> Path:
        manifest = {
            "stage": self.stage,
            "tool": "mooclens",
            "version": __version__,
            "started_at": self.started.isoformat(),
            "config_source": self.config.source,
            "overrides": self.config.overrides,
            "config_digest": self.config.digest(),
            "config": self.config.snapshot(),
            "seeds": self.seeds,
            "inputs": self.inputs,
            "outputs": {str(p.resolve()): _io.sha256_file(p) for p in self.outputs},
            "notes": self.notes,
        }
        path = ensure_dir(self.out / "manifests") / f"{self.stage}.json"
        path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        return path


@contextmanager
def run_lock(out: Path):
    """One run per output directory; a lock left by a dead process is taken over."""
    ensure_dir(out)
    lock = out / ".mooclens.lock"
    try:
        fd = os.open(lock, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
    except FileExistsError:
        try:
            pid = int(lock.read_text().strip() or 0)
            os.kill(pid, 0)
        except (ValueError, ProcessLookupError, PermissionError, OSError):
            lock.unlink(missing_ok=True)
            fd = os.open(lock, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
        else:
            raise StageError(f"{out} is locked by running process {pid}")
    with os.fdopen(fd, "w") as fh:
        fh.write(str(os.getpid()))
    try:
        yield
    finally:
        lock.unlink(missing_ok=True)


# -- helpers -----------------------------------------------------------------


def _load_run_corpus(run: Run):
    return load_corpus(run.need(CORPUS, "ingest"), courses_path=run.need(COURSES, "ingest"))


def _valence_lexicon(cfg: RunConfig) -> ValenceLexicon:
    paths = cfg.values["paths"]
    return ValenceLexicon.from_files(
        paths["valence_lexicon"] or _io.data_path("valence.tsv"),
        paths["booster_lexicon"] or _io.data_path("boosters.tsv"),
        paths["negator_lexicon"] or _io.data_path("negators.txt"),
    )


def _polarity_lexicon(cfg: RunConfig) -> PolarityLexicon:
    paths = cfg.values["paths"]
    return PolarityLexicon.from_files(
        paths["polarity_lexicon"] or _io.data_path("polarity.tsv"),
        paths["polarity_boosters"] or _io.data_path("polarity_boosters.txt"),
    )


def _category_lexicon(cfg: RunConfig) -> CategoryLexicon:
    path = cfg.get("paths", "category_lexicon")
    return CategoryLexicon.from_file(path) if path else CategoryLexicon.bundled()


def _write_json(path: Path, obj) -> Path:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True, ensure_ascii=False) + "\n", encoding="utf-8")
    return path


def _model_params(cfg: RunConfig, name: str) -> dict:
    section = cfg.values[f"lda.{name}"]
    return {
        "n_topics": section["n_topics"],
        "alpha": section["alpha"],
        "beta": section["beta"],
        "iterations": section["iterations"],
        "seed": cfg.seed(f"lda.{name}"),
    }


def _read_docs(run: Run, name: str) -> list[TokenDoc]:
    return read_token_docs(run.need(DOCS[name], "preprocess"))


def _load_model(run: Run, name: str) -> TopicModel:
    return TopicModel.load(run.need(MODEL[name], "lda-train"))


# -- stages ------------------------------------------------------------------


def stage_ingest(run: Run) -> int:
    cfg = run.config
    src = cfg.get("paths", "input")
    if src is None:
        raise ConfigError(["paths.input: required by ingest"])
    if not Path(src).is_file():
        raise ConfigError([f"paths.input: file not found: {src}"])
    courses = cfg.get("paths", "courses")
    corpus = load_corpus(src, courses_path=courses)
    run.add_input(Path(src))
    if courses:
        run.add_input(Path(courses))
    rejects = run.path(REJECTS)
    write_rejects(corpus, rejects)
    run.wrote(rejects)
    if cfg.get("corpus", "language"):
        corpus = filter_language(corpus, cfg.get("corpus", "language"))
    corpus = filter_min_reviews(corpus, cfg.get("corpus", "min_reviews"))
    run.wrote(*save_corpus(corpus, run.path(CORPUS), run.path(COURSES)))
    summary = corpus_summary(corpus)
    summary["filters"] = [
        {"name": e.name, "courses_before": e.courses_before, "courses_after": e.courses_after,
         "reviews_before": e.reviews_before, "reviews_after": e.reviews_after}
        for e in corpus.history
    ]
    run.wrote(_write_json(run.path("corpus_summary.json"), summary))
    if corpus.rejects and not cfg.get("corpus", "allow_rejects"):
        run.notes["rejects"] = len(corpus.rejects)
        logger.error("%d record(s) rejected; see %s (set corpus.allow_rejects=true to accept)",
                     len(corpus.rejects), rejects)
        return 1
    return 0


def stage_preprocess(run: Run) -> int:
    cfg = run.config
    corpus = _load_run_corpus(run)
    stop_path = cfg.get("paths", "stopwords")
    prep = TextPreprocessor(
        stopwords=load_stopwords(stop_path) if stop_path else None,
        min_token_length=cfg.get("preprocess", "min_token_length"),
        min_count=cfg.get("preprocess", "min_count"),
    )
    docs = preprocess_corpus(corpus, prep, fit=True)
    write_token_docs(run.path(TOKENS), docs)
    run.wrote(run.path(TOKENS))
    if cfg.get("preprocess", "projection") == "lexicon":
        lexicon = _category_lexicon(cfg)
        projected = {
            "qual": [project_vocabulary(d, lexicon, Category.QUALITATIVE) for d in docs],
            "content": [project_vocabulary(d, lexicon, Category.CONTENT) for d in docs],
        }
    else:
        projected = {"qual": docs, "content": docs}
    for name, pdocs in projected.items():
        write_token_docs(run.path(DOCS[name]), pdocs)
        run.wrote(run.path(DOCS[name]))
        run.notes[f"{name}_empty"] = sum(1 for d in pdocs if d.empty)
    table = prep.frequency_table_
    _io.write_csv(run.path("frequencies.csv"), ["word", "count"],
                  sorted(table.counts.items(), key=lambda kv: (-kv[1], kv[0])))
    run.path("candidates.txt").write_text("".join(w + "\n" for w in prep.candidates_), encoding="utf-8")
    run.wrote(run.path("frequencies.csv"), run.path("candidates.txt"))
    return 0


def stage_sentiment(run: Run) -> int:
    cfg = run.config
    corpus = _load_run_corpus(run)
    s = cfg.values["sentiment"]
    if s["engine"] == "external":
        path = cfg.get("paths", "external_labels")
        if path is None:
            raise ConfigError(["paths.external_labels: required when sentiment.engine = external"])
        result = import_external_labels(path, known_ids=[r.review_id for r in corpus.reviews])
        run.add_input(Path(path))
        scores = result.scores
        run.notes.update(rejected_labels=len(result.rejects), unknown_ids=len(result.unknown_ids))
    else:
        if s["engine"] == "valence_rule":
            scorer = ValenceRuleScorer(_valence_lexicon(cfg), s["alpha"], s["negation_scalar"], s["pos_threshold"],
                                       s["neg_threshold"], s["raw_text"])
        else:
            scorer = PolarityScorer(_polarity_lexicon(cfg), pos_threshold=s["pos_threshold"],
                                    neg_threshold=s["neg_threshold"], raw=s["raw_text"])
        scores = score_corpus(corpus, scorer)
    write_scores(run.path(SENTIMENT), scores)
    courses = aggregate_course_sentiment(scores, corpus)
    _io.write_csv(
        run.path("course_sentiment.csv"),
        ["course_id", "engine", "n_scored", "mean_compound", "pct_positive", "pct_neutral", "pct_negative",
         "majority_label"],
        [(c.course_id, c.engine, c.n_scored, c.mean_compound, 100 * c.label_share("Positive"),
          100 * c.label_share("Neutral"), 100 * c.label_share("Negative"), c.majority_label) for c in courses],
    )
    corr = {}
    for method in ("pearson", "spearman"):
        try:
            corr[method] = correlate_sentiment_rating(scores, corpus, method)
        except UndefinedCorrelationError as exc:
            corr[method] = None
            corr[f"{method}_note"] = str(exc)
    run.wrote(run.path(SENTIMENT), run.path("course_sentiment.csv"),
              _write_json(run.path("sentiment_rating_correlation.json"), corr))
    return 0


def stage_lda_train(run: Run) -> int:
    cfg = run.config
    for name in cfg.get("lda", "models"):
        docs = [d for d in _read_docs(run, name) if not d.empty]
        params = _model_params(cfg, name)
        run.seeds[f"lda.{name}"] = params["seed"]
        if not docs:
            raise StageError(f"{name}: every projected document is empty")
        try:
            model = train_lda(docs, **params)
        except ValueError as exc:
            raise StageError(f"{name}: {exc}") from exc
        labels_path = cfg.get(f"lda.{name}", "labels")
        if labels_path:
            model = with_labels(model, read_topic_labels(labels_path))
            run.add_input(Path(labels_path))
        model.save(run.path(MODEL[name]))
        n = min(cfg.get(f"lda.{name}", "top_n"), len(model.vocab))
        write_topic_summary(run.path(f"topics_{name}.csv"), top_words(model, n))
        run.wrote(run.path(MODEL[name]), run.path(f"topics_{name}.csv"))
        run.notes[f"{name}_documents"] = len(docs)
    return 0


def stage_coherence(run: Run) -> int:
    cfg = run.config
    c = cfg.values["coherence"]
    name = c["model"]
    docs = [d for d in _read_docs(run, name) if not d.empty]
    model_cfg = cfg.values[f"lda.{name}"]
    seed = cfg.seed("coherence")
    run.seeds["coherence"] = seed
    report = sweep_topic_count(
        docs, c["k_min"], c["k_max"], c["step"],
        # unset alpha means 50/K per K; one fixed alpha flattens C_v beyond the true K
        alpha=c["alpha"],
        beta=model_cfg["beta"],
        iterations=c["iterations"] or model_cfg["iterations"],
        seed=seed, top_n=c["top_n"], window=c["window"],
    )
    path = run.path(f"coherence_{name}.csv")
    report.to_csv(path)
    run.wrote(path)
    run.notes["recommended_k"] = report.recommended_k
    run.notes["failures"] = {str(k): v for k, v in report.failures.items()}
    if report.recommended_k is None:
        raise StageError("no K could be scored")
    return 0


def _profiles(run: Run):
    corpus = _load_run_corpus(run)
    scores = read_scores(run.need(SENTIMENT, "sentiment"))
    models = {name: _load_model(run, name) for name in ("qual", "content")}
    docs = {name: _read_docs(run, name) for name in ("qual", "content")}
    sentiments = aggregate_course_sentiment(scores, corpus)
    return corpus, build_profiles(corpus, sentiments, models["qual"], models["content"], docs["qual"], docs["content"])


def stage_stats(run: Run) -> int:
    cfg = run.config
    corpus = _load_run_corpus(run)
    hist = rating_histogram(corpus)
    write_histogram(run.path("rating_histogram.csv"), hist)
    write_binned(run.path("course_means.csv"), course_mean_distribution(corpus, cfg.get("stats", "mean_bins")))
    run.wrote(run.path("rating_histogram.csv"), run.path("course_means.csv"))
    have_models = all(run.path(MODEL[n]).is_file() for n in ("qual", "content"))
    if not (have_models and run.path(SENTIMENT).is_file()):
        logger.info("models or sentiment scores missing; topic-by-sentiment tests skipped")
        return 0
    _, profiles = _profiles(run)
    seed = cfg.seed("stats")
    run.seeds["stats"] = seed
    n_perm = cfg.get("stats", "n_perm")
    tests = {}
    rows = []
    for which in ("qual", "content"):
        for label, vec in topic_distribution_by_sentiment(profiles, which).items():
            rows += [(which, label, k, float(v)) for k, v in enumerate(vec)]
        matrix = grouped_matrix(profiles, which)
        entry = {"n_positive": matrix.groups.count("Positive"), "n_negative": matrix.groups.count("Negative")}
        try:
            res = manova_pillai(matrix, n_perm=n_perm, seed=seed)
            entry.update(pillai=res.pillai, f=_finite(res.f), df1=_finite(res.df1), df2=_finite(res.df2), p=res.p,
                         method=res.method)
        except ValueError as exc:
            entry["manova_error"] = str(exc)
        try:
            entry["permutation_p"] = permutation_test(matrix, n_perm=n_perm, seed=seed)
        except (ValueError, np.linalg.LinAlgError) as exc:
            entry["permutation_error"] = str(exc)
        tests[which] = entry
    _io.write_csv(run.path("topic_by_sentiment.csv"), ["model", "label", "topic", "percent"], rows)
    run.wrote(run.path("topic_by_sentiment.csv"), _write_json(run.path("manova.json"), tests))
    return 0


def _finite(x):
    return None if x is None or not np.isfinite(x) else float(x)


def stage_characterize(run: Run) -> int:
    cfg = run.config
    _, profiles = _profiles(run)
    if not profiles:
        raise StageError("no course has reviews; nothing to characterize")
    order = cfg.get("characterize", "order")
    emit_report(profiles, run.path("report.json"), "json", generated_at=run.timestamp(), order=order)
    emit_report(profiles, run.path("report.csv"), "csv", order=order)
    write_plot_data(run.path("plot_data.csv"), profiles)
    run.wrote(run.path("report.json"), run.path("report.csv"), run.path("plot_data.csv"))
    return 0


def stage_synth(run: Run) -> int:
    cfg = run.config
    s = cfg.values["synth"]
    seed = cfg.seed("synth")
    run.seeds["synth"] = seed
    if s["kind"] == "planted":
        spec = PlantedSpec(n_topics=s["n_topics"], vocab_size=s["vocab_size"], n_docs=s["n_docs"],
                           doc_len=s["doc_len"], alpha=s["alpha"], beta=s["beta"], seed=seed,
                           n_courses=s["n_courses"])
        corpus, phi, theta, vocab = generate_corpus(spec)
        save_planted(run.path("planted.json"), spec, phi, theta, vocab)
        run.wrote(run.path("planted.json"))
        # pseudo-words are already lemmas; the planted corpus has no categories
        docs = [TokenDoc(r.review_id, tuple(r.text.split())) for r in corpus.reviews]
        for name in (TOKENS, DOCS["qual"], DOCS["content"]):
            write_token_docs(run.path(name), docs)
            run.wrote(run.path(name))
    elif s["kind"] == "reviews":
        corpus = build_review_fixture(n_reviews=s["n_reviews"], n_courses=s["n_courses"], seed=seed)
    else:
        corpus = build_four_course_fixture(seed=seed)
    run.wrote(*save_corpus(corpus, run.path(CORPUS), run.path(COURSES)))
    return 0


HANDLERS = {
    "ingest": stage_ingest,
    "preprocess": stage_preprocess,
    "sentiment": stage_sentiment,
    "lda-train": stage_lda_train,
    "coherence-sweep": stage_coherence,
    "stats": stage_stats,
    "characterize": stage_characterize,
    "synth": stage_synth,
}


def run_subcommand(name: str, config: RunConfig) -> int:
    """Run one stage under the output-directory lock and write its manifest."""
    run = Run(name, config)
    with run_lock(run.out):
        t0 = time.perf_counter()
        status = HANDLERS[name](run)
        run.notes["elapsed_seconds"] = round(time.perf_counter() - t0, 3)
        run.write_manifest()
    return status


def verify_stage(name: str, out: Path) -> list[str]:
    """Re-hash the files recorded in a stage manifest; return mismatches."""
    path = Path(out) / "manifests" / f"{name}.json"
    if not path.is_file():
        return [f"{path}: no manifest"]
    manifest = json.loads(path.read_text(encoding="utf-8"))
    problems = []
    for kind in ("inputs", "outputs"):
        for file, digest in manifest[kind].items():
            if not Path(file).is_file():
                problems.append(f"{kind[:-1]} missing: {file}")
            elif _io.sha256_file(file) != digest:
                problems.append(f"{kind[:-1]} changed: {file}")
    return problems


# -- argument handling -------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-c", "--config", help="INI config file (default: $MOOCLENS_CONFIG)")
    common.add_argument("-o", "--output-dir", help="overrides run.output_dir")
    common.add_argument("--seed", type=int, help="overrides run.seed")
    common.add_argument("--set", dest="overrides", action="append", default=[], metavar="SECTION.KEY=VALUE",
                        help="override one config value (repeatable)")
    common.add_argument("--verify", action="store_true", help="re-check the stage manifest digests instead of running")
    common.add_argument("-v", "--verbose", action="count", default=0)

    parser = argparse.ArgumentParser(prog="mooclens", description="Course review analytics pipeline.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")
    helps = {
        "ingest": "load, validate and filter a review file",
        "preprocess": "clean, lemmatize and project review text",
        "sentiment": "score reviews and aggregate per course",
        "lda-train": "train the topic models",
        "coherence-sweep": "score a range of topic counts",
        "stats": "rating distributions, correlations and group tests",
        "characterize": "per-course profiles, report and plot data",
        "synth": "write a synthetic corpus",
    }
    for name in STAGES:
        p = sub.add_parser(name, parents=[common], help=helps[name])
        if name == "ingest":
            p.add_argument("input", nargs="?", help="overrides paths.input")
            p.add_argument("--courses", help="overrides paths.courses")
        if name == "synth":
            p.add_argument("--kind", choices=("planted", "reviews", "four_course"), help="overrides synth.kind")
    return parser


def _overrides(args) -> list[str]:
    out = []
    if args.output_dir:
        out.append(f"run.output_dir={args.output_dir}")
    if args.seed is not None:
        out.append(f"run.seed={args.seed}")
    if getattr(args, "input", None):
        out.append(f"paths.input={args.input}")
    if getattr(args, "courses", None):
        out.append(f"paths.courses={args.courses}")
    if getattr(args, "kind", None):
        out.append(f"synth.kind={args.kind}")
    return out + list(args.overrides)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2),
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        config = load_config(args.config, _overrides(args))
    except ConfigError as exc:
        for problem in exc.problems:
            print(f"config error: {problem}", file=sys.stderr)
        return 2
    if args.verify:
        problems = verify_stage(args.command, config.output_dir)
        for problem in problems:
            print(f"verify: {problem}", file=sys.stderr)
        if not problems:
            print(f"{args.command}: all digests match")
        return 1 if problems else 0
    try:
        return run_subcommand(args.command, config)
    except ConfigError as exc:
        for problem in exc.problems:
            print(f"config error: {problem}", file=sys.stderr)
        return 2
    except (StageError, CorpusError, ValueError, OSError) as exc:
        print(f"{args.command} failed: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
