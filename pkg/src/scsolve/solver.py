"""Pick the option whose filled sentence the model scores as most likely right."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Protocol, Sequence

import numpy as np

from .qdata import ScQuestion, expand
from .seq2seq import Seq2Seq
from .tokenizer import Vocab, encode, pad_batch


class SolveError(ValueError):
    pass


class OptionScorer(Protocol):
    def p_right(self, sentences: Sequence[str]) -> np.ndarray: ...


class ModelScorer:
    """Scores filled sentences with a trained model, in batches."""

    def __init__(self, model: Seq2Seq, vocab: Vocab, batch_size: int = 64):
        if vocab.size != model.config.vocab_size:
            raise ValueError(f"vocab has {vocab.size} entries but model expects {model.config.vocab_size}")
        self.model = model
        self.vocab = vocab
        self.batch_size = batch_size

    def p_right(self, sentences: Sequence[str]) -> np.ndarray:
        encoded = [encode(s, self.vocab, self.model.config.max_len) for s in sentences]
        out = []
        for start in range(0, len(encoded), self.batch_size):
            ids, mask = pad_batch(encoded[start:start + self.batch_size])
            out.append(self.model.p_right_ids(ids, mask))
        return np.concatenate(out) if out else np.zeros(0)


@dataclass(frozen=True)
class Prediction:
    question_id: str
    per_option_p_right: tuple[float, ...]
    chosen_index: int
    diagnostics: tuple[str, ...] = ()

    @property
    def confidence(self) -> float:
        return self.per_option_p_right[self.chosen_index]


@dataclass(frozen=True)
class Decision:
    prediction: Prediction
    threshold: float
    answered: bool

    @property
    def abstained(self) -> bool:
        return not self.answered


def choose(probs: Sequence[float]) -> int:
    """Lowest index among the maxima."""
    return int(np.argmax(np.asarray(probs)))


def prediction_from_scores(question_id: str, probs: Sequence[float], diagnostics=()) -> Prediction:
    probs = tuple(float(p) for p in probs)
    return Prediction(question_id, probs, choose(probs), tuple(diagnostics))


def score_option(scorer: OptionScorer, q: ScQuestion, i: int) -> float:
    cands = {c.option_index: c for c in expand(q, strict=False)}
    if i not in cands:
        return 0.0
    return float(scorer.p_right([cands[i].sentence])[0])


def solve(scorer: OptionScorer, q: ScQuestion) -> Prediction:
    cands = expand(q, strict=False)
    if not cands:
        raise SolveError(f"question {q.id}: no option can be filled into the stem")
    probs = np.zeros(q.m)
    probs[[c.option_index for c in cands]] = scorer.p_right([c.sentence for c in cands])
    diagnostics = [f"option {i} does not fit the {q.n_blanks} blank(s); scored 0" for i in q.mismatched]
    return prediction_from_scores(q.id, probs, diagnostics)


def solve_many(scorer: OptionScorer, questions: Sequence[ScQuestion]) -> list[Prediction]:
    """Score all candidates of all questions in one pass."""
    sentences: list[str] = []
    where: list[tuple[int, int]] = []
    for qi, q in enumerate(questions):
        for c in expand(q, strict=False):
            sentences.append(c.sentence)
            where.append((qi, c.option_index))
    scores = scorer.p_right(sentences) if sentences else np.zeros(0)
    table = [np.zeros(q.m) for q in questions]
    filled = [0] * len(questions)
    for (qi, oi), p in zip(where, scores):
        table[qi][oi] = p
        filled[qi] += 1
    out = []
    for q, probs, n in zip(questions, table, filled):
        if not n:
            raise SolveError(f"question {q.id}: no option can be filled into the stem")
        diagnostics = [f"option {i} does not fit the {q.n_blanks} blank(s); scored 0" for i in q.mismatched]
        out.append(prediction_from_scores(q.id, probs, diagnostics))
    return out


def decide(prediction: Prediction, threshold: float) -> Decision:
    if not 0.0 <= threshold <= 1.0:
        raise ValueError(f"threshold {threshold} outside [0, 1]")
    return Decision(prediction, threshold, prediction.confidence >= threshold)


def solve_with_threshold(scorer: OptionScorer, q: ScQuestion, threshold: float) -> Decision:
    if not 0.0 <= threshold <= 1.0:
        raise ValueError(f"threshold {threshold} outside [0, 1]")
    return decide(solve(scorer, q), threshold)


def decision_record(q: ScQuestion, d: Decision) -> dict:
    p = d.prediction
    rec = {
        "id": q.id,
        "chosen": p.chosen_index,
        "probs": [round(x, 6) for x in p.per_option_p_right],
        "confidence": round(p.confidence, 6),
        "decision": "answered" if d.answered else "abstained",
    }
    if q.answer_index is not None:
        rec["correct"] = p.chosen_index == q.answer_index
    if p.diagnostics:
        rec["diagnostics"] = list(p.diagnostics)
    return rec


def write_decisions(path, questions: Sequence[ScQuestion], decisions: Sequence[Decision]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for q, d in zip(questions, decisions):
            fh.write(json.dumps(decision_record(q, d)) + "\n")
