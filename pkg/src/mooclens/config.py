"""Run configuration: an INI file plus ``section.key=value`` overrides.

Every key has a type and a default; unknown sections or keys are errors.
Blank values mean "unset" (for optional keys and seeds, which then fall back
to ``run.seed``). The default config path can be given in the
``MOOCLENS_CONFIG`` environment variable.
"""

from __future__ import annotations

import configparser
import hashlib
import json
import os
from dataclasses import dataclass, field
from pathlib import Path

ENV_VAR = "MOOCLENS_CONFIG"


class ConfigError(ValueError):
    def __init__(self, problems: list[str]):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


def _bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


def _str_list(text: str) -> list[str]:
    return [p.strip() for p in text.split(",") if p.strip()]


def _float_list(text: str) -> list[float]:
    return [float(p) for p in _str_list(text)]


# (parser, default); a default of None marks an optional key
_MODEL_SECTION = {
    "n_topics": (int, 10),
    "alpha": (float, None),
    "beta": (float, 0.01),
    "iterations": (int, 1000),
    "seed": (int, None),
    "top_n": (int, 10),
    "labels": (Path, None),
}

SCHEMA: dict[str, dict[str, tuple]] = {
    "run": {"seed": (int, 0), "output_dir": (Path, Path("mooclens-out"))},
    "paths": {
        "input": (Path, None),
        "courses": (Path, None),
        "stopwords": (Path, None),
        "category_lexicon": (Path, None),
        "valence_lexicon": (Path, None),
        "booster_lexicon": (Path, None),
        "negator_lexicon": (Path, None),
        "polarity_lexicon": (Path, None),
        "polarity_boosters": (Path, None),
        "external_labels": (Path, None),
    },
    "corpus": {"language": (str, "en"), "min_reviews": (int, 1), "allow_rejects": (_bool, False)},
    "preprocess": {"min_count": (int, 500), "min_token_length": (int, 2), "projection": (str, "lexicon")},
    "sentiment": {
        "engine": (str, "valence_rule"),
        "pos_threshold": (float, 0.1),
        "neg_threshold": (float, -0.1),
        "alpha": (float, 15.0),
        "negation_scalar": (float, -0.74),
        "raw_text": (_bool, False),
    },
    "lda": {"models": (_str_list, ["qual", "content"])},
    "lda.qual": dict(_MODEL_SECTION),
    "lda.content": dict(_MODEL_SECTION),
    "coherence": {
        "model": (str, "qual"),
        "k_min": (int, 2),
        "k_max": (int, 10),
        "step": (int, 1),
        "top_n": (int, 10),
        "window": (int, 110),
        "iterations": (int, None),
        "alpha": (float, None),
        "seed": (int, None),
    },
    "stats": {"n_perm": (int, 999), "seed": (int, None), "mean_bins": (_float_list, [1.0, 2.0, 3.0, 4.0, 4.5, 5.0])},
    "characterize": {"order": (str, "n_reviews"), "low_evidence_min": (int, 5)},
    "synth": {
        "kind": (str, "planted"),
        "n_topics": (int, 5),
        "vocab_size": (int, 200),
        "n_docs": (int, 2000),
        "doc_len": (int, 60),
        "alpha": (float, 0.1),
        "beta": (float, 0.01),
        "n_courses": (int, 20),
        "n_reviews": (int, 100),
        "seed": (int, None),
    },
}

_CHOICES = {
    ("preprocess", "projection"): ("lexicon", "none"),
    ("sentiment", "engine"): ("valence_rule", "polarity_avg", "external"),
    ("coherence", "model"): ("qual", "content"),
    ("characterize", "order"): ("n_reviews", "rating"),
    ("synth", "kind"): ("planted", "reviews", "four_course"),
}
_POSITIVE = {
    ("corpus", "min_reviews"), ("preprocess", "min_token_length"), ("lda.qual", "n_topics"),
    ("lda.content", "n_topics"), ("lda.qual", "iterations"), ("lda.content", "iterations"), ("coherence", "k_min"),
    ("coherence", "k_max"), ("coherence", "step"), ("coherence", "window"), ("stats", "n_perm"),
    ("synth", "n_topics"), ("synth", "vocab_size"), ("synth", "doc_len"), ("synth", "n_courses"),
}


@dataclass
class RunConfig:
    values: dict = field(default_factory=dict)
    source: str | None = None
    overrides: list = field(default_factory=list)

    def get(self, section: str, key: str):
        return self.values[section][key]

    def seed(self, section: str) -> int:
        value = self.values.get(section, {}).get("seed")
        return self.values["run"]["seed"] if value is None else value

    @property
    def output_dir(self) -> Path:
        return self.values["run"]["output_dir"]

    def snapshot(self) -> dict:
        def plain(v):
            if isinstance(v, Path):
                return str(v)
            if isinstance(v, list):
                return [plain(x) for x in v]
            return v

        return {s: {k: plain(v) for k, v in kv.items()} for s, kv in self.values.items()}

    def digest(self) -> str:
        text = json.dumps(self.snapshot(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode("utf-8")).hexdigest()


def _parse(section: str, key: str, raw: str, problems: list[str], base: Path | None):
    parser, default = SCHEMA[section][key]
    raw = raw.strip()
    if raw == "":
        if default is None or key == "seed":
            return None
        problems.append(f"{section}.{key}: empty value")
        return default
    try:
        value = parser(raw)
    except ValueError as exc:
        problems.append(f"{section}.{key}: {exc}")
        return default
    if isinstance(value, Path) and base is not None and not value.is_absolute():
        value = base / value
    return value


def _check(values: dict, problems: list[str]) -> None:
    for (section, key), choices in _CHOICES.items():
        if values[section][key] not in choices:
            problems.append(f"{section}.{key}: must be one of {', '.join(choices)}")
    for section, key in _POSITIVE:
        v = values[section][key]
        if v is not None and v < 1:
            problems.append(f"{section}.{key}: must be >= 1")
    for section in ("lda.qual", "lda.content"):
        if values[section]["n_topics"] < 2:
            problems.append(f"{section}.n_topics: must be >= 2")
        for key in ("alpha", "beta"):
            v = values[section][key]
            if v is not None and v <= 0:
                problems.append(f"{section}.{key}: must be positive")
    if values["coherence"]["k_min"] < 2:
        problems.append("coherence.k_min: must be >= 2")
    if values["coherence"]["k_max"] < values["coherence"]["k_min"]:
        problems.append("coherence.k_max: must be >= coherence.k_min")
    if values["stats"]["n_perm"] < 100:
        problems.append("stats.n_perm: must be >= 100")
    s = values["sentiment"]
    if s["neg_threshold"] > s["pos_threshold"]:
        problems.append("sentiment.neg_threshold: must not exceed sentiment.pos_threshold")
    bad_models = [m for m in values["lda"]["models"] if m not in ("qual", "content")]
    if bad_models or not values["lda"]["models"]:
        problems.append("lda.models: comma-separated subset of qual, content")
    for section, kv in values.items():
        for key, v in kv.items():
            if key == "seed" and v is not None and v < 0:
                problems.append(f"{section}.seed: must be a non-negative integer")
    for key, v in values["paths"].items():
        if v is not None and key != "input" and not Path(v).exists():
            problems.append(f"paths.{key}: file not found: {v}")


def load_config(path=None, overrides: list[str] | None = None) -> RunConfig:
    """Read ``path`` (or ``$MOOCLENS_CONFIG``), apply overrides, validate.

    Raises :class:`ConfigError` listing every problem found.
    """
    overrides = list(overrides or [])
    problems: list[str] = []
    if path is None and os.environ.get(ENV_VAR):
        path = os.environ[ENV_VAR]
    values = {s: {k: d for k, (_, d) in keys.items()} for s, keys in SCHEMA.items()}
    if path is not None:
        path = Path(path)
        parser = configparser.ConfigParser(interpolation=None, default_section="__defaults__")
        parser.optionxform = str
        try:
            with open(path, encoding="utf-8") as fh:
                parser.read_file(fh)
        except (OSError, configparser.Error) as exc:
            raise ConfigError([f"config {path}: {exc}"]) from exc
        for section in parser.sections():
            if section not in SCHEMA:
                problems.append(f"[{section}]: unknown section")
                continue
            for key, raw in parser.items(section):
                if key not in SCHEMA[section]:
                    problems.append(f"{section}.{key}: unknown key")
                    continue
                values[section][key] = _parse(section, key, raw, problems, path.parent)
    for item in overrides:
        name, sep, raw = item.partition("=")
        section, _, key = name.strip().rpartition(".")
        if not sep or section not in SCHEMA or key not in SCHEMA[section]:
            problems.append(f"override {item!r}: expected section.key=value with a known key")
            continue
        values[section][key] = _parse(section, key, raw, problems, None)
    if not problems:
        _check(values, problems)
    if problems:
        raise ConfigError(problems)
    return RunConfig(values, None if path is None else str(path), overrides)


def example_config() -> str:
    """Commented INI listing every section and key with its default."""
    lines = ["# mooclens run configuration; blank values mean unset", ""]
    for section, keys in SCHEMA.items():
        lines.append(f"[{section}]")
        for key, (_, default) in keys.items():
            if isinstance(default, list):
                shown = ", ".join(str(v) for v in default)
            else:
                shown = "" if default is None else str(default).lower() if isinstance(default, bool) else str(default)
            lines.append(f"{key} = {shown}")
        lines.append("")
    return "\n".join(lines)
