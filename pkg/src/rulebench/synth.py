"""Seeded synthetic corpus generator for end-to-end experiments.

Plants per-topic keyword vocabularies plus a shared noise vocabulary and a
hook word that is common in the first topic but leaks into everything else,
so a one-feature seed rule on the hook starts near a configurable precision.
Identical parameters always produce byte-identical output files.
"""

from __future__ import annotations

import json
import os
import random
from dataclasses import asdict, dataclass

from .corpus import Corpus, Document
from .knowledge import HypernymLexicon, KnowledgeBase

FORMAT_VERSION = 1

_TOPIC_NAMES = ("alpha", "beta", "gamma", "delta", "epsilon", "zeta")


class SynthError(Exception):
    pass


@dataclass(frozen=True)
class SynthConfig:
    """Generator knobs; every value lands in the manifest for auditability.

    Documents cycle topic0, topic1, ..., noise, so each planted topic holds
    exactly 1/(topics+1) of the corpus. The pseudo-words all end in a digit
    plus `x`, which the stemmer and the tokenizer both leave alone.
    """

    docs: int = 50000
    topics: int = 3
    seed: int = 1
    signal_vocab: int = 60
    signals_per_doc: int = 3
    noise_vocab: int = 400
    noise_per_doc: int = 4
    hook_word: str = "hook0x"
    hook_in_topic: float = 0.8
    seed_precision: float = 0.55

    def __post_init__(self):
        if self.docs < self.topics + 1:
            raise SynthError("need at least one document per topic plus noise")
        if self.topics < 1:
            raise SynthError("need at least one topic")
        if self.signal_vocab < self.signals_per_doc:
            raise SynthError("signal vocabulary smaller than words per document")
        if self.noise_vocab < self.signals_per_doc + self.noise_per_doc:
            raise SynthError("noise vocabulary smaller than words per document")
        if not 0.0 < self.hook_in_topic <= 1.0:
            raise SynthError("hook_in_topic must be in (0, 1]")
        if not 0.0 < self.seed_precision < 1.0:
            raise SynthError("seed_precision must be in (0, 1)")
        if self.hook_elsewhere() > 1.0:
            raise SynthError("seed_precision unreachable with these shares")

    def topic_names(self) -> list[str]:
        names = list(_TOPIC_NAMES[: self.topics])
        while len(names) < self.topics:
            names.append(f"topic{len(names)}")
        return names

    def tag(self) -> str:
        return self.topic_names()[0]

    def hook_elsewhere(self) -> float:
        """Hook rate outside the first topic that hits the target precision.

        With topic share s and in-topic rate p, precision of `contains hook`
        is s*p / (s*p + (1-s)*q); solving for q pins the starting point.
        """
        share = 1.0 / (self.topics + 1)
        target = self.seed_precision
        return share * self.hook_in_topic * (1.0 - target) / (target * (1.0 - share))


def signal_words(config: SynthConfig, topic: int) -> list[str]:
    name = config.topic_names()[topic]
    return [f"{name}{j}x" for j in range(config.signal_vocab)]


def noise_words(config: SynthConfig) -> list[str]:
    return [f"noise{j}x" for j in range(config.noise_vocab)]


@dataclass
class SynthData:
    config: SynthConfig
    docs: list[tuple[str, str]]  # (doc id, text) in generation order
    labels: dict[str, dict[str, bool]]
    hypernyms: dict[str, str]  # signal word -> topic name
    manifest: dict


def generate(config: SynthConfig) -> SynthData:
    """Build the whole corpus in memory from one seeded RNG stream."""
    rng = random.Random(config.seed)
    names = config.topic_names()
    tag = config.tag()
    vocabularies = [signal_words(config, t) for t in range(config.topics)]
    noise = noise_words(config)
    q = config.hook_elsewhere()

    docs: list[tuple[str, str]] = []
    labels: dict[str, dict[str, bool]] = {}
    width = max(5, len(str(config.docs - 1)))
    for i in range(config.docs):
        slot = i % (config.topics + 1)
        if slot < config.topics:
            words = rng.sample(vocabularies[slot], config.signals_per_doc)
            words += rng.sample(noise, config.noise_per_doc)
            hook_p = config.hook_in_topic if slot == 0 else q
        else:
            words = rng.sample(noise, config.signals_per_doc + config.noise_per_doc)
            hook_p = q
        rng.shuffle(words)
        if rng.random() < hook_p:
            words.insert(rng.randrange(len(words) + 1), config.hook_word)
        doc_id = f"d{i:0{width}d}"
        docs.append((doc_id, " ".join(words)))
        labels[doc_id] = {tag: slot == 0}

    hypernyms = {
        word: names[t] for t in range(config.topics) for word in vocabularies[t]
    }
    manifest = {
        "format_version": FORMAT_VERSION,
        "generator": asdict(config),
        "derived": {
            "tag": tag,
            "topic_names": names,
            "hook_elsewhere": q,
            "relevant_docs": sum(1 for v in labels.values() if v[tag]),
        },
    }
    return SynthData(config=config, docs=docs, labels=labels, hypernyms=hypernyms, manifest=manifest)


def seed_rule_text(config: SynthConfig) -> str:
    return f"tag: {config.tag()}\nTweets.Keyword.Contains('{config.hook_word}')\n"


def build_corpus(data: SynthData) -> tuple[Corpus, KnowledgeBase]:
    """Index the generated documents without touching the filesystem."""
    corpus = Corpus()
    for doc_id, text in data.docs:
        corpus.add(Document(doc_id=doc_id, text=text))
    kb = KnowledgeBase(hypernyms=HypernymLexicon(dict(data.hypernyms)))
    return corpus, kb


def write_corpus(data: SynthData, out_dir: str) -> dict[str, str]:
    """Write corpus.jsonl, labels.jsonl, lexicon/, rule.txt and manifest.json.

    Output is byte-identical for identical configs: one RNG stream, sorted
    JSON keys, no timestamps or absolute paths.
    """
    os.makedirs(out_dir, exist_ok=True)
    lexicon_dir = os.path.join(out_dir, "lexicon")
    os.makedirs(lexicon_dir, exist_ok=True)
    paths = {
        "corpus": os.path.join(out_dir, "corpus.jsonl"),
        "labels": os.path.join(out_dir, "labels.jsonl"),
        "hypernyms": os.path.join(lexicon_dir, "hypernyms.tsv"),
        "rule": os.path.join(out_dir, "rule.txt"),
        "manifest": os.path.join(out_dir, "manifest.json"),
    }
    tag = data.config.tag()
    with open(paths["corpus"], "w", encoding="utf-8") as fh:
        for doc_id, text in data.docs:
            fh.write(json.dumps({"id": doc_id, "text": text}, sort_keys=True) + "\n")
    with open(paths["labels"], "w", encoding="utf-8") as fh:
        for doc_id, _ in data.docs:
            record = {"id": doc_id, "tag": tag, "relevant": data.labels[doc_id][tag]}
            fh.write(json.dumps(record, sort_keys=True) + "\n")
    with open(paths["hypernyms"], "w", encoding="utf-8") as fh:
        for word in sorted(data.hypernyms):
            fh.write(f"{word}\t{data.hypernyms[word]}\n")
    with open(paths["rule"], "w", encoding="utf-8") as fh:
        fh.write(seed_rule_text(data.config))
    with open(paths["manifest"], "w", encoding="utf-8") as fh:
        fh.write(json.dumps(data.manifest, sort_keys=True, indent=2) + "\n")
    return paths
