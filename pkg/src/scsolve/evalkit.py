"""Per-category accuracy and threshold sweeps for selective answering."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .qdata import Category, ScQuestion
from .solver import OptionScorer, Prediction, solve_many


@dataclass
class CategoryStats:
    n: int = 0
    correct: int = 0

    @property
    def accuracy(self) -> float | None:
        return self.correct / self.n if self.n else None


@dataclass
class EvalReport:
    categories: dict[Category, CategoryStats]
    n: int
    correct: int
    skipped: int = 0
    split: str = "test"

    @property
    def accuracy(self) -> float:
        return self.correct / self.n

    def table(self) -> str:
        lines = [f"{'category':<9}{'n':>7}{'accuracy':>10}"]
        for cat in Category:
            s = self.categories[cat]
            acc = "-" if s.accuracy is None else f"{s.accuracy:.4f}"
            lines.append(f"{cat.value:<9}{s.n:>7}{acc:>10}")
        lines.append(f"{'overall':<9}{self.n:>7}{self.accuracy:>10.4f}")
        if self.skipped:
            lines.append(f"skipped: {self.skipped}")
        return "\n".join(lines)

    def records(self) -> list[str]:
        rows = [(c.value, s.n, s.accuracy) for c, s in self.categories.items()]
        rows.append(("overall", self.n, self.accuracy))
        return [f"{self.split}\t{cat}\t{n}\t{'' if acc is None else repr(acc)}" for cat, n, acc in rows]


@dataclass(frozen=True)
class PrPoint:
    threshold: float
    solvable: int
    correct: int
    total: int

    @property
    def recall(self) -> float:
        return self.solvable / self.total

    @property
    def precision(self) -> float | None:
        return self.correct / self.solvable if self.solvable else None


@dataclass
class PrCurve:
    points: list[PrPoint] = field(default_factory=list)

    def at(self, threshold: float) -> PrPoint:
        for p in self.points:
            if np.isclose(p.threshold, threshold):
                return p
        raise KeyError(threshold)

    def records(self) -> list[str]:
        out = []
        for p in self.points:
            prec = "" if p.precision is None else repr(p.precision)
            out.append(f"{p.threshold:.2f}\t{prec}\t{p.recall!r}\t{p.solvable}\t{p.correct}")
        return out


def default_grid(step: float = 0.01) -> list[float]:
    n = int(round(1.0 / step))
    return [round(i * step, 10) for i in range(n + 1)]


def report_from_predictions(questions: Sequence[ScQuestion], predictions: Sequence[Prediction],
                            skipped: int = 0, split: str = "test") -> EvalReport:
    if not questions:
        raise ValueError("cannot evaluate an empty dataset")
    cats = {c: CategoryStats() for c in Category}
    for q, p in zip(questions, predictions, strict=True):
        if q.answer_index is None:
            raise ValueError(f"question {q.id} has no answer key")
        s = cats[q.category]
        s.n += 1
        s.correct += int(p.chosen_index == q.answer_index)
    total = sum(s.n for s in cats.values())
    correct = sum(s.correct for s in cats.values())
    return EvalReport(cats, total, correct, skipped, split)


def curve_from_predictions(questions: Sequence[ScQuestion], predictions: Sequence[Prediction],
                           thresholds: Sequence[float]) -> PrCurve:
    if not len(thresholds):
        raise ValueError("need at least one threshold")
    if any(not 0.0 <= t <= 1.0 for t in thresholds):
        raise ValueError("thresholds must lie in [0, 1]")
    if list(thresholds) != sorted(thresholds):
        raise ValueError("thresholds must be sorted")
    conf = np.array([p.confidence for p in predictions])
    right = np.array([p.chosen_index == q.answer_index for q, p in zip(questions, predictions, strict=True)])
    total = len(predictions)
    points = []
    for t in thresholds:
        keep = conf >= t
        points.append(PrPoint(float(t), int(keep.sum()), int((keep & right).sum()), total))
    return PrCurve(points)


def _split_usable(scorer: OptionScorer, questions: Sequence[ScQuestion]):
    usable = [q for q in questions if len(q.mismatched) < q.m]
    return usable, len(questions) - len(usable)


def evaluate(scorer: OptionScorer, questions: Sequence[ScQuestion], split: str = "test") -> EvalReport:
    if not questions:
        raise ValueError("cannot evaluate an empty dataset")
    usable, skipped = _split_usable(scorer, questions)
    return report_from_predictions(usable, solve_many(scorer, usable), skipped, split)


def pr_sweep(scorer: OptionScorer, questions: Sequence[ScQuestion], thresholds: Sequence[float]) -> PrCurve:
    if not len(thresholds):
        raise ValueError("need at least one threshold")
    usable, _ = _split_usable(scorer, questions)
    return curve_from_predictions(usable, solve_many(scorer, usable), thresholds)
