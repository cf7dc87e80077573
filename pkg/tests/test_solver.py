import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from scsolve.qdata import ScQuestion, expand, parse_question
from scsolve.seq2seq import ModelConfig, Seq2Seq
from scsolve.solver import (
    ModelScorer, SolveError, choose, decide, prediction_from_scores, solve, solve_many,
    solve_with_threshold, write_decisions,
)
from scsolve.tokenizer import build_vocab
from scsolve.training import TrainConfig, Trainer, make_finetune_dataset


class TableScorer:
    """Looks filled sentences up in a fixed table; counts calls."""

    def __init__(self, table):
        self.table = table
        self.calls = 0

    def p_right(self, sentences):
        self.calls += 1
        return np.array([self.table[s] for s in sentences])


def scorer_for(q, probs):
    return TableScorer({c.sentence: p for c, p in zip(expand(q, strict=False), probs)})


Q = ScQuestion("q", "She ___ to school.", ("go", "goes", "going", "gone"), 1)


def test_choose_argmax():
    assert choose([0.1, 0.9, 0.3, 0.2]) == 1


def test_choose_tie_takes_lowest_index():
    assert choose([0.7, 0.2, 0.7]) == 0


def test_solve_picks_highest():
    pred = solve(scorer_for(Q, [0.1, 0.9, 0.3, 0.2]), Q)
    assert pred.chosen_index == 1
    assert pred.confidence == 0.9
    assert pred.per_option_p_right == (0.1, 0.9, 0.3, 0.2)


@settings(max_examples=30, deadline=None)
@given(st.permutations(range(4)))
def test_permuting_options_permutes_choice(perm):
    probs = [0.1, 0.9, 0.3, 0.2]
    table = scorer_for(Q, probs).table
    shuffled = ScQuestion("q", Q.stem, tuple(Q.options[i] for i in perm))
    pred = solve(TableScorer(table), shuffled)
    assert shuffled.options[pred.chosen_index] == "goes"


def test_threshold_rules():
    pred = prediction_from_scores("q", [0.1, 0.6])
    assert decide(pred, 0.6).answered
    assert decide(pred, 0.61).abstained
    assert decide(pred, 0.0).answered
    assert not decide(pred, 1.0).answered
    assert decide(prediction_from_scores("q", [1.0, 0.0]), 1.0).answered


@pytest.mark.parametrize("tau", [-0.01, 1.01])
def test_threshold_out_of_range(tau):
    with pytest.raises(ValueError):
        decide(prediction_from_scores("q", [0.5, 0.5]), tau)
    with pytest.raises(ValueError):
        solve_with_threshold(scorer_for(Q, [0.1, 0.9, 0.3, 0.2]), Q, tau)


def test_abstention_is_monotone_in_threshold():
    rng = np.random.default_rng(0)
    preds = [prediction_from_scores(str(i), rng.random(4)) for i in range(200)]
    answered = [sum(decide(p, t).answered for p in preds) for t in np.linspace(0, 1, 21)]
    assert answered == sorted(answered, reverse=True)
    assert answered[0] == 200


def test_unfillable_option_scores_zero():
    q = ScQuestion("w", "She ___ fast.", ("goes; well", "runs", "run"), 1)
    pred = solve(scorer_for(q, [0.8, 0.3]), q)
    assert pred.per_option_p_right == (0.0, 0.8, 0.3)
    assert pred.chosen_index == 1
    assert "option 0" in pred.diagnostics[0]


def test_all_unfillable_is_error():
    q = ScQuestion("w", "She ___ fast.", ("a; b", "c; d"))
    with pytest.raises(SolveError):
        solve(TableScorer({}), q)
    with pytest.raises(SolveError):
        solve_many(TableScorer({}), [q])


def test_solve_many_matches_sequential_in_one_call():
    qs = [Q, ScQuestion("r", "They ___ home.", ("walk", "walks"), 0)]
    table = {**scorer_for(Q, [0.1, 0.9, 0.3, 0.2]).table, **scorer_for(qs[1], [0.6, 0.4]).table}
    batched = TableScorer(table)
    together = solve_many(batched, qs)
    assert batched.calls == 1
    assert together == [solve(TableScorer(table), q) for q in qs]


def test_decisions_file(tmp_path):
    d = decide(solve(scorer_for(Q, [0.1, 0.9, 0.3, 0.2]), Q), 0.95)
    path = tmp_path / "out.jsonl"
    write_decisions(path, [Q], [d])
    rec = json.loads(path.read_text())
    assert rec == {"id": "q", "chosen": 1, "probs": [0.1, 0.9, 0.3, 0.2], "confidence": 0.9,
                   "decision": "abstained", "correct": True}


def test_model_scorer_rejects_vocab_mismatch():
    model = Seq2Seq(ModelConfig(d=8, heads=2, vocab_size=30))
    with pytest.raises(ValueError):
        ModelScorer(model, build_vocab(["a b c"]))


def test_model_scorer_batches_consistently():
    vocab = build_vocab(["she go goes going gone to school ."])
    model = Seq2Seq(ModelConfig(d=8, enc_layers=1, dec_layers=1, heads=2, ffn=16, vocab_size=vocab.size,
                                precision="f64"))
    sentences = [c.sentence for c in expand(Q)]
    np.testing.assert_allclose(ModelScorer(model, vocab, batch_size=1).p_right(sentences),
                               ModelScorer(model, vocab, batch_size=64).p_right(sentences), rtol=1e-12)


def test_overfit_model_separates_right_and_wrong(table1_record):
    qs = [parse_question(table1_record), Q,
          ScQuestion("r", "They ___ home every day.", ("walk", "walks", "walking"), 0)]
    vocab = build_vocab([q.stem for q in qs] + [o for q in qs for o in q.options])
    model = Seq2Seq(ModelConfig(d=16, enc_layers=1, dec_layers=1, heads=2, ffn=32,
                                vocab_size=vocab.size, max_len=48))
    examples, _ = make_finetune_dataset(qs, vocab, 48)
    trainer = Trainer(model, TrainConfig(lr=3e-3))
    for _ in range(300):
        trainer.finetune_step(examples)
    scorer = ModelScorer(model, vocab)
    for q in qs:
        probs = solve(scorer, q).per_option_p_right
        assert probs[q.answer_index] > 0.9
        assert all(p < 0.1 for i, p in enumerate(probs) if i != q.answer_index)
