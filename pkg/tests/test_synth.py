"""Seeded corpus generation: determinism, shares, and file output."""

import filecmp
import json

import pytest

from rulebench.corpus import Corpus
from rulebench.lang import load_rule_file
from rulebench.synth import (
    SynthConfig,
    SynthError,
    build_corpus,
    generate,
    seed_rule_text,
    write_corpus,
)

SMALL = SynthConfig(docs=400, topics=3, seed=7, signal_vocab=10, noise_vocab=40)


def test_identical_configs_generate_identical_data():
    first = generate(SMALL)
    second = generate(SMALL)
    assert first.docs == second.docs
    assert first.labels == second.labels
    assert first.manifest == second.manifest
    third = generate(SynthConfig(docs=400, topics=3, seed=8, signal_vocab=10, noise_vocab=40))
    assert third.docs != first.docs


def test_topics_split_the_corpus_evenly():
    data = generate(SMALL)
    relevant = sum(1 for v in data.labels.values() if v["alpha"])
    assert relevant == 100
    assert data.manifest["derived"]["relevant_docs"] == 100
    assert data.manifest["derived"]["tag"] == "alpha"
    assert len(data.docs) == 400
    assert len(data.labels) == 400


def test_leak_rate_follows_from_the_target_precision():
    # share 0.25, in-topic rate 0.8, target 0.55
    assert SynthConfig().hook_elsewhere() == pytest.approx(0.21818181818181817)


def test_seed_rule_starts_near_the_target_precision():
    data = generate(SynthConfig(docs=4000, topics=3, seed=2))
    hooked = [doc_id for doc_id, text in data.docs if "hook0x" in text.split()]
    relevant = sum(1 for doc_id in hooked if data.labels[doc_id]["alpha"])
    assert relevant / len(hooked) == pytest.approx(0.55, abs=0.05)


def test_extra_topics_get_numbered_names():
    config = SynthConfig(docs=80, topics=7, signal_vocab=10, noise_vocab=40)
    assert config.topic_names()[:2] == ["alpha", "beta"]
    assert config.topic_names()[6] == "topic6"


@pytest.mark.parametrize(
    "kwargs",
    [
        {"docs": 3, "topics": 3},
        {"topics": 0},
        {"signal_vocab": 2, "signals_per_doc": 3},
        {"noise_vocab": 5},
        {"hook_in_topic": 0.0},
        {"seed_precision": 1.0},
        {"seed_precision": 0.1},
    ],
)
def test_impossible_configs_are_rejected(kwargs):
    with pytest.raises(SynthError):
        SynthConfig(**kwargs)


def test_in_memory_corpus_and_lexicon_match_the_data():
    data = generate(SMALL)
    corpus, kb = build_corpus(data)
    assert corpus.doc_count == 400
    assert kb.hypernyms.lookup("alpha0x") == "alpha"
    assert kb.hypernyms.lookup("beta3x") == "beta"
    assert kb.hypernyms.lookup("noise0x") is None


def test_written_files_are_byte_identical_across_runs(tmp_path):
    data = generate(SMALL)
    paths_a = write_corpus(data, str(tmp_path / "a"))
    paths_b = write_corpus(generate(SMALL), str(tmp_path / "b"))
    for name in paths_a:
        assert filecmp.cmp(paths_a[name], paths_b[name], shallow=False), name


def test_written_corpus_parses_back_cleanly(tmp_path):
    data = generate(SMALL)
    paths = write_corpus(data, str(tmp_path / "out"))
    corpus = Corpus()
    count, warnings = corpus.ingest_file(paths["corpus"])
    assert (count, warnings) == (400, [])
    assert corpus.doc_count == 400
    rule = load_rule_file(paths["rule"], rule_id="seed")
    assert rule.tag == "alpha"
    with open(paths["labels"], encoding="utf-8") as fh:
        records = [json.loads(line) for line in fh]
    assert len(records) == 400
    assert all(set(r) == {"id", "tag", "relevant"} for r in records)
    manifest = json.loads(open(paths["manifest"], encoding="utf-8").read())
    assert manifest["generator"]["seed"] == 7
    assert manifest["format_version"] == 1


def test_seed_rule_text_names_the_hook():
    text = seed_rule_text(SynthConfig())
    assert text == "tag: alpha\nTweets.Keyword.Contains('hook0x')\n"
