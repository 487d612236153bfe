"""Regenerate the third-party-derived data files under ``src/mooclens/data``.

Inputs are the unpacked distributions of three public packages::

    pip download --no-deps vaderSentiment==3.3.2 textblob==0.20.1 langdetect==1.0.9
    python -m zipfile -e vaderSentiment-3.3.2-py2.py3-none-any.whl vader
    python -m zipfile -e textblob-0.20.1-py3-none-any.whl tb
    tar xzf langdetect-1.0.9.tar.gz

Then::

    python scripts/build_bundled_data.py /path/to/download/dir

Hand-curated files (category lexicon, stopwords, irregular lemmas, negators)
are not touched by this script.
"""

import argparse
import gzip
import json
import re
import xml.etree.ElementTree as ET
from collections import defaultdict
from pathlib import Path

DATA = Path(__file__).resolve().parents[1] / "src" / "mooclens" / "data"
ALPHA = re.compile(r"^[a-z]+$")

PROFILE_LANGS = ("en", "es", "fr", "pt", "de", "it", "nl")
PROFILE_SIZE = 300

# booster words with positive increments; dampeners are not representable
BOOSTERS = (
    "absolutely amazingly awfully completely considerable considerably decidedly deeply "
    "enormous enormously entirely especially exceptional exceptionally extreme extremely "
    "fabulously fully greatly highly hugely incredible incredibly intensely major majorly "
    "more most particularly purely quite really remarkably so substantially thoroughly "
    "total totally tremendous tremendously uber unbelievably unusually utter utterly very"
).split()
BOOSTER_INCREMENT = 0.293

INFLECTED_TAGS = {"NNS", "NNPS", "NNP", "VBD", "VBN", "VBG", "VBZ", "JJR", "JJS", "RBR", "RBS"}


def build_valence(root):
    negators = set((DATA / "negators.txt").read_text().split())
    rows = []
    for line in (root / "vader" / "vaderSentiment" / "vader_lexicon.txt").open(encoding="utf-8"):
        word, mean = line.split("\t")[:2]
        if not ALPHA.match(word) or word in BOOSTERS or word in negators:
            continue
        rows.append((word, float(mean)))
    with (DATA / "valence.tsv").open("w", encoding="utf-8") as fh:
        fh.write("# word<TAB>valence, derived from the vaderSentiment 3.3.2 lexicon (MIT)\n")
        for word, mean in sorted(rows):
            fh.write(f"{word}\t{mean}\n")
    with (DATA / "boosters.tsv").open("w", encoding="utf-8") as fh:
        fh.write("# word<TAB>increment\n")
        for word in sorted(BOOSTERS):
            fh.write(f"{word}\t{BOOSTER_INCREMENT}\n")
    return len(rows)


def build_polarity(root):
    tree = ET.parse(root / "tb" / "textblob" / "en" / "en-sentiment.xml")
    polarity = defaultdict(list)
    intensity = defaultdict(list)
    for node in tree.getroot().iter("word"):
        form = node.get("form", "").lower()
        if not ALPHA.match(form):
            continue
        polarity[form].append(float(node.get("polarity", 0.0)))
        intensity[form].append(float(node.get("intensity", 1.0)))
    boosters = sorted(w for w, xs in intensity.items() if sum(xs) / len(xs) > 1.0)
    with (DATA / "polarity.tsv").open("w", encoding="utf-8") as fh:
        fh.write("# word<TAB>polarity, sense-averaged from Pattern's en-sentiment.xml (PDDL)\n")
        for form in sorted(polarity):
            if form in boosters:
                continue
            xs = polarity[form]
            fh.write(f"{form}\t{round(sum(xs) / len(xs), 6)}\n")
    with (DATA / "polarity_boosters.txt").open("w", encoding="utf-8") as fh:
        fh.write("\n".join(boosters) + "\n")
    return len(polarity) - len(boosters), len(boosters)


def build_wordtags(root):
    rows = {}
    for line in (root / "tb" / "textblob" / "en" / "en-lexicon.txt").open(encoding="utf-8"):
        if line.startswith(";;;"):
            continue
        parts = line.split()
        if len(parts) < 2 or not ALPHA.match(parts[0]):
            continue
        rows.setdefault(parts[0], parts[1].split("|")[0])
    with gzip.open(DATA / "wordtags.tsv.gz", "wt", encoding="utf-8") as fh:
        for word in sorted(rows):
            fh.write(f"{word}\t{rows[word]}\n")
    return len(rows)


def build_profiles(root):
    profiles = {}
    for lang in PROFILE_LANGS:
        raw = json.loads((root / "langdetect-1.0.9" / "langdetect" / "profiles" / lang).read_text())
        merged = defaultdict(int)
        for gram, count in raw["freq"].items():
            gram = gram.lower()
            if all(ch == " " or ch.isalpha() for ch in gram) and gram.strip():
                merged[gram] += count
        ranked = sorted(merged.items(), key=lambda kv: (-kv[1], kv[0]))[:PROFILE_SIZE]
        profiles[lang] = [gram for gram, _ in ranked]
    (DATA / "langprofiles.json").write_text(json.dumps(profiles, ensure_ascii=False, indent=0))
    return {k: len(v) for k, v in profiles.items()}


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("download_dir", type=Path)
    args = parser.parse_args()
    root = args.download_dir
    print("valence entries:", build_valence(root))
    print("polarity entries / boosters:", build_polarity(root))
    print("tagged words:", build_wordtags(root))
    print("profiles:", build_profiles(root))


if __name__ == "__main__":
    main()
