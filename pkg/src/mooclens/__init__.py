"""Review analytics for online courses: ingestion, text preparation,
lexicon sentiment, Gibbs-sampled LDA, coherence, statistics and per-course
profiles."""

__version__ = "0.1.0"

from .characterize import CourseProfile, build_course_profile, emit_plot_data, emit_report, parse_report
from .coherence import CoherenceReport, coherence_cv, coherence_umass, sweep_topic_count
from .corpus import Corpus, Course, Review, filter_language, filter_min_reviews, load_corpus, save_corpus
from .langid import LanguageDetector, detect_language
from .lda import GibbsLDA, TopicModel, infer_doc_topics, top_words, topic_proportions, train_lda
from .sentiment import (
    PolarityScorer,
    ValenceRuleScorer,
    aggregate_course_sentiment,
    import_external_labels,
    label_from_compound,
    score_polarity_avg,
    score_valence_rule,
)
from .stats import manova_pillai, pearson, permutation_test, rating_histogram, spearman
from .synth import PlantedSpec, generate_corpus, match_topics
from .textprep import CategoryLexicon, TextPreprocessor, TokenDoc, VocabularyProjector, clean_text

__all__ = [
    "CategoryLexicon", "CoherenceReport", "Corpus", "Course", "CourseProfile", "GibbsLDA", "LanguageDetector",
    "PlantedSpec", "PolarityScorer", "Review", "TextPreprocessor", "TokenDoc", "TopicModel", "ValenceRuleScorer",
    "VocabularyProjector", "aggregate_course_sentiment", "build_course_profile", "clean_text", "coherence_cv",
    "coherence_umass", "detect_language", "emit_plot_data", "emit_report", "filter_language", "filter_min_reviews",
    "generate_corpus", "import_external_labels", "infer_doc_topics", "label_from_compound", "load_corpus",
    "manova_pillai", "match_topics", "parse_report", "pearson", "permutation_test", "rating_histogram",
    "save_corpus", "score_polarity_avg", "score_valence_rule", "spearman", "sweep_topic_count", "top_words",
    "topic_proportions", "train_lda",
]
