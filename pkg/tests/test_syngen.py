import json

import pytest

from scsolve import syngen
from scsolve.qdata import Category, expand, fill, parse_question, write_questions

from conftest import TABLE1_OPTIONS

SMALL = syngen.GenConfig({"C1": 60, "C2": 60, "C3": 60, "C4": 60}, seed=7, corpus_size=300)


@pytest.fixture(scope="module")
def items():
    return syngen.generate_items(SMALL)


def test_counts_per_category(items):
    train, test = items
    for cat in Category:
        assert sum(it.category is cat for it in train + test) == 60
        assert sum(it.category is cat for it in test) == 10


def test_categorizer_agrees_with_intent(items):
    assert all(syngen.intended_category_agrees(it) for it in items[0] + items[1])


def test_exactly_one_option_passes_checker(items):
    for it in items[0] + items[1]:
        checker = syngen.CHECKERS[it.family]
        q = it.question
        assert [checker(it.slots, s) for s in q.segments] == [i == q.answer_index for i in range(q.m)]


def test_options_come_from_paradigm(items):
    for it in items[0] + items[1]:
        for segs in it.question.segments:
            assert all(s in allowed for s, allowed in zip(segs, it.paradigm))


def test_splits_are_disjoint(items):
    train, test = items
    assert not {it.question.id for it in train} & {it.question.id for it in test}
    assert not {it.correct_sentence for it in train} & {it.correct_sentence for it in test}
    assert {it.question.split for it in train} == {"train"}
    assert {it.question.split for it in test} == {"test"}


def test_corpus_withholds_test_sentences(items):
    sentences = syngen.corpus(SMALL)
    assert len(sentences) == 300
    assert not set(sentences) & {it.correct_sentence for it in items[1]}
    assert all("___" not in s for s in sentences)


def test_byte_identical_across_runs(tmp_path):
    paths = []
    for run in ("a", "b"):
        train, test = syngen.generate(SMALL)
        path = tmp_path / f"{run}.jsonl"
        write_questions(path, train + test)
        paths.append(path.read_bytes())
    assert paths[0] == paths[1]
    other, _ = syngen.generate(syngen.GenConfig(SMALL.counts, seed=8))
    assert [q.stem for q in other] != [q.stem for q in syngen.generate(SMALL)[0]]


def test_questions_round_trip_through_parser(items):
    for it in items[1]:
        q = it.question
        assert parse_question(q.to_record()) == q
        assert len(expand(q)) == q.m


@pytest.mark.parametrize("m", [3, 5])
def test_option_count(m):
    train, _ = syngen.generate(syngen.GenConfig({"C1": 8, "C2": 8, "C3": 8, "C4": 8}, m=m, seed=1))
    assert {q.m for q in train} == {m}


@pytest.mark.parametrize("kwargs", [{"m": 2}, {"m": 6}, {"counts": {"C1": -1}}, {"counts": {"C1": 0}},
                                    {"test_fraction": 1.0}])
def test_config_validation(kwargs):
    with pytest.raises(ValueError):
        syngen.GenConfig(**kwargs)


def test_manifest(tmp_path):
    path = tmp_path / "manifest.json"
    syngen.write_manifest(path, SMALL, {"train.jsonl": "abc"})
    data = json.loads(path.read_text())
    assert data["seed"] == 7 and data["counts"]["C3"] == 60
    assert data["template_versions"] == syngen.TEMPLATE_VERSIONS


@pytest.mark.parametrize("verb", syngen.VERBS, ids=lambda v: v.base)
def test_morphology_rules_match_lexicon(verb):
    assert syngen.third_person_form(verb.base) == verb.third
    assert syngen.ing_form(verb.base) == verb.ing
    assert len(set(verb.forms)) == 5


@pytest.mark.parametrize("subject, form", [("She", "goes"), ("I", "go"), ("They", "go"),
                                           ("My brother", "goes"), ("Tom and Mary", "go")])
def test_agreement_checker(subject, form):
    slots = {"subject": subject, "verb": "go"}
    assert syngen.check_agreement(slots, (form,))
    for other in ("go", "goes", "went", "going", "gone"):
        if other != form:
            assert not syngen.check_agreement(slots, (other,))


def test_modal_rule_derives_table1_key():
    slots = {"evidence": "positive", "reply": "no"}
    verdicts = [syngen.check_modal_pair(slots, tuple(s.strip() for s in o.split(";"))) for o in TABLE1_OPTIONS]
    assert verdicts == [False, False, False, True]


def test_modal_stem_reads_like_table1():
    import numpy as np
    rng = np.random.default_rng(0)
    inst = syngen.BUILDERS["modal_pair"](rng)
    sentence = fill(inst.stem, inst.key)
    assert sentence.startswith("— That ") and " — " in sentence and sentence.endswith("color.")


@pytest.mark.parametrize("segments, ok", [(("not only", "but also"), True), (("either", "nor"), False),
                                          (("neither", "nor"), True), (("both", "or"), False)])
def test_correlative_checker(segments, ok):
    assert syngen.check_correlative({}, segments) is ok
