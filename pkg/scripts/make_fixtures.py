"""Regenerate the synthetic fixture corpus shipped in src/citepurpose/data/fixtures.

    python scripts/make_fixtures.py [--out DIR]

Output is deterministic: 60 labeled citation records over 6 citing papers
(10 per label), one full text per paper, worthiness/section scaffold files, a
50-d word-vector file covering most of the vocabulary, and a run config.
"""

from __future__ import annotations

import argparse
import json
import random
from pathlib import Path

from citepurpose.corpus import LABELS, SECTION_LABELS
from citepurpose.textproc import tokenize

SURNAMES = """Adams Baker Chen Diaz Evans Foster Garcia Hughes Ito Jensen Kumar Lopez Moreau Nakamura Olsen
Patel Quinn Rossi Santos Tanaka Ueda Vargas Weber Xu Yilmaz Zhang Abbott Bianchi Costa Dubois Eriksen Fischer
Gupta Hansen Ivanova Jones Kowalski Larsen Meyer Novak Ortiz Park Reyes Schmidt Torres Umar Volkov Walsh Young
Zimmer Alvarez Brandt Carter Duarte Engel Fuentes Grant Holm Iqbal Jovanovic""".split()
TOPICS = ["parsing", "retrieval", "summarization", "tagging", "translation", "clustering", "segmentation", "alignment"]
TOOLS = ["encoder", "tokenizer", "classifier", "parser", "lexicon", "corpus"]

TEMPLATES = {
    "BACKGROUND": [
        "{S} et al. describe the general landscape of {T} research.",
        "{S} et al. give a broad survey of {T} methods.",
    ],
    "USES": [
        "We use the {K} toolkit from {S} et al. to preprocess our {T} data.",
        "Our pipeline uses the {K} released by {S} et al. for {T}.",
    ],
    "COMPARES_CONTRASTS": [
        "Our {T} results are similar to the findings of {S} et al. on this task.",
        "Our {T} scores are in line with {S} et al. on the same benchmark.",
        "Our {T} accuracy is higher when compared with {S} et al. on this task.",
        "Despite a smaller {K}, our {T} system matches {S} et al. on this task.",
    ],
    "MOTIVATION": [
        "The open problem in {T} identified by {S} et al. motivates our work.",
        "{S} et al. point out a gap in {T} that motivates this paper.",
    ],
    "EXTENSION": [
        "We extend the {K} of {S} et al. with a new {T} module.",
        "Building on {S} et al., we extend their {K} to handle {T}.",
    ],
    "FUTURE": [
        "Future work could adapt the {K} approach of {S} et al. to {T}.",
        "In future work we plan to apply the ideas of {S} et al. to {T}.",
    ],
}
SECTION_OF_LABEL = {
    "BACKGROUND": "Introduction",
    "MOTIVATION": "Introduction",
    "USES": "Methods",
    "EXTENSION": "Methods",
    "COMPARES_CONTRASTS": "Results",
    "FUTURE": "Discussion",
}
FILLER = {
    "Introduction": "This paper studies {T} for scientific text.",
    "Methods": "The model is trained with standard settings for {T}.",
    "Results": "Table {N} reports the scores on the {T} benchmark.",
    "Discussion": "These findings suggest that {T} remains hard.",
}
WORTHY = [
    "{S} et al. ({Y}) proposed a {T} method.",
    "As shown in [{N}], the {K} improves {T}.",
    "Prior {T} systems ({S}, {Y}) rely on a {K}.",
]
UNWORTHY = [
    "We describe the {T} pipeline in detail.",
    "The {K} is trained on the {T} split.",
    "This choice keeps the {T} setup simple.",
]
SECTION_SENTENCES = {
    "introduction": "In this paper we introduce a new approach to {T}.",
    "methods": "We trained the {K} using gradient descent for {T}.",
    "results": "Table {N} shows that accuracy on {T} improves.",
    "discussion": "These findings suggest why {T} errors persist.",
    "related_work": "Prior approaches to {T} include rule based systems.",
    "conclusion": "In conclusion we presented a {K} for {T}.",
    "other": "This work was supported by grant {N} from the foundation.",
}


def fill(template: str, rng: random.Random, **fixed) -> str:
    values = {
        "S": rng.choice(SURNAMES),
        "T": rng.choice(TOPICS),
        "K": rng.choice(TOOLS),
        "N": str(rng.randint(1, 9)),
        "Y": str(rng.randint(1995, 2020)),
    }
    values.update(fixed)
    return template.format(**values)


def make(out: Path, seed: int = 13) -> None:
    rng = random.Random(seed)
    out.mkdir(parents=True, exist_ok=True)
    (out / "fulltext").mkdir(exist_ok=True)
    surnames = iter(SURNAMES)
    records = []
    for j in range(6):
        pid = f"p{j + 1}"
        topic = TOPICS[j]
        citing_title = f"Neural Methods for {topic.title()} of Scientific Articles"
        body: dict[str, list[str]] = {s: [fill(FILLER[s], rng, T=topic)] for s in FILLER}
        for k in range(10):
            label = LABELS[(j + k) % 6].value
            surname = next(surnames)
            context = fill(rng.choice(TEMPLATES[label]), rng, S=surname)
            cited_title = f"{rng.choice(['Robust', 'Efficient', 'Scalable'])} {rng.choice(TOPICS).title()} with a {rng.choice(TOOLS).title()}"
            if k % 3 == 0:
                cited_title += " for Scientific Articles"
            records.append(
                {
                    "record_id": f"{pid}-{k:02d}",
                    "citing_paper_id": pid,
                    "citing_title": citing_title,
                    "citing_author": f"Author{j + 1} Writer",
                    "cited_title": cited_title,
                    "cited_author": f"{rng.choice('ABCDEFGH')}. {surname}",
                    "citation_context": context,
                    "label": label,
                }
            )
            section = SECTION_OF_LABEL[label]
            body[section].append(context)
            # repeat mentions in other sections for some cited works
            for extra in rng.sample(list(FILLER), k % 3):
                body[extra].append(f"{surname} et al. also report related {topic} findings.")
            body[section].append(fill(FILLER[section], rng, T=topic))
        lines = ["Abstract", f"We study {topic} of scientific articles.", ""]
        for n, section in enumerate(FILLER, start=1):
            lines.append(f"{n} {section}")
            lines.append(" ".join(body[section]))
            lines.append("")
        (out / "fulltext" / f"{pid}.txt").write_text("\n".join(lines), encoding="utf-8")

    with open(out / "citations.jsonl", "w", encoding="utf-8") as fh:
        for r in records:
            fh.write(json.dumps(r) + "\n")

    with open(out / "worthiness.jsonl", "w", encoding="utf-8") as fh:
        for i in range(300):
            worthy = i % 2 == 0
            sentence = fill(rng.choice(WORTHY if worthy else UNWORTHY), rng)
            fh.write(json.dumps({"sentence": sentence, "has_citation": worthy}) + "\n")
    with open(out / "sections.jsonl", "w", encoding="utf-8") as fh:
        for i in range(350):
            label = SECTION_LABELS[i % len(SECTION_LABELS)]
            fh.write(json.dumps({"sentence": fill(SECTION_SENTENCES[label], rng), "section_label": label}) + "\n")

    vocab = set()
    for path in [out / "citations.jsonl", out / "worthiness.jsonl", out / "sections.jsonl", *sorted((out / "fulltext").glob("*.txt"))]:
        vocab.update(tokenize(path.read_text(encoding="utf-8")))
    vrng = random.Random(seed + 1)
    with open(out / "vectors.txt", "w", encoding="utf-8") as fh:
        for token in sorted(vocab):
            if vrng.random() < 0.15:  # leave some words out of the static table
                continue
            fh.write(token + " " + " ".join(f"{vrng.gauss(0, 0.5):.6f}" for _ in range(50)) + "\n")

    config = {
        "citations": "citations.jsonl",
        "fulltext_dir": "fulltext",
        "worthiness": "worthiness.jsonl",
        "sections": "sections.jsonl",
        "word_vectors": "vectors.txt",
        "output_dir": "runs/fixture",
        "seed": 0,
        "val_fraction": 0.34,
        "tfidf_max_features": 5000,
        "train": {"max_epochs": 40, "patience": 8, "batch_size": 16, "h_lstm": 32, "hidden": 64},
    }
    (out / "config.json").write_text(json.dumps(config, indent=2) + "\n", encoding="utf-8")


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default=str(Path(__file__).resolve().parents[1] / "src/citepurpose/data/fixtures"))
    ap.add_argument("--seed", type=int, default=13)
    args = ap.parse_args()
    make(Path(args.out), args.seed)
