"""Sentence-completion questions: parsing, categorisation and option filling."""
from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from typing import Iterable, Iterator

BLANK_PATTERN = r"_{3,}"
SEPARATOR = ";"

_blank_re = re.compile(BLANK_PATTERN)
_spaces_re = re.compile(r"\s+")


class QuestionError(ValueError):
    """Structural problem with a question (no blanks, duplicate options, ...)."""


class ParseError(QuestionError):
    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


class FillError(QuestionError):
    def __init__(self, n_blanks: int, n_segments: int):
        super().__init__(f"option has {n_segments} segment(s) but stem has {n_blanks} blank(s)")
        self.n_blanks = n_blanks
        self.n_segments = n_segments


class Category(str, Enum):
    C1 = "C1"  # one blank, one token
    C2 = "C2"  # one blank, many tokens
    C3 = "C3"  # many blanks, one token each
    C4 = "C4"  # many blanks, many tokens

    def __str__(self) -> str:
        return self.value


def normalize_ws(text: str) -> str:
    return _spaces_re.sub(" ", text).strip()


def count_blanks(stem: str, pattern: str = BLANK_PATTERN) -> int:
    return len(re.findall(pattern, stem))


def split_option(option_text: str, separator: str = SEPARATOR) -> tuple[str, ...]:
    """Split a multi-blank option into its per-blank segments."""
    if not option_text or not option_text.strip():
        raise QuestionError("empty option")
    segments = tuple(normalize_ws(s) for s in option_text.split(separator))
    if any(not s for s in segments):
        raise QuestionError(f"empty segment in option {option_text!r}")
    return segments


def fill(stem: str, segments: tuple[str, ...] | list[str], pattern: str = BLANK_PATTERN) -> str:
    """Substitute segments into the blanks left to right."""
    n_blanks = count_blanks(stem, pattern)
    if n_blanks != len(segments):
        raise FillError(n_blanks, len(segments))
    it = iter(segments)
    return normalize_ws(re.sub(pattern, lambda _: next(it), stem))


@dataclass(frozen=True)
class FilledCandidate:
    question_id: str
    option_index: int
    sentence: str
    label: bool | None = None


@dataclass(frozen=True)
class ScQuestion:
    id: str
    stem: str
    options: tuple[str, ...]
    answer_index: int | None = None
    split: str | None = None
    blank_pattern: str = field(default=BLANK_PATTERN, compare=False, repr=False)
    separator: str = field(default=SEPARATOR, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "options", tuple(self.options))
        if self.n_blanks == 0:
            raise QuestionError(f"question {self.id}: stem has no blank marker")
        if len(self.options) < 2:
            raise QuestionError(f"question {self.id}: need at least 2 options, got {len(self.options)}")
        normed = [normalize_ws(o) for o in self.options]
        if len(set(normed)) != len(normed):
            raise QuestionError(f"question {self.id}: duplicate options")
        if self.answer_index is not None and not 0 <= self.answer_index < len(self.options):
            raise QuestionError(f"question {self.id}: answer {self.answer_index} out of range")

    @property
    def m(self) -> int:
        return len(self.options)

    @cached_property
    def n_blanks(self) -> int:
        return count_blanks(self.stem, self.blank_pattern)

    @cached_property
    def segments(self) -> tuple[tuple[str, ...] | None, ...]:
        """Per-option segments; None where the option cannot be split."""
        out = []
        for opt in self.options:
            try:
                out.append(split_option(opt, self.separator))
            except QuestionError:
                out.append(None)
        return tuple(out)

    @property
    def mismatched(self) -> tuple[int, ...]:
        """Indices of options whose segment count differs from the blank count."""
        return tuple(i for i, s in enumerate(self.segments) if s is None or len(s) != self.n_blanks)

    @property
    def warning(self) -> bool:
        return bool(self.mismatched)

    @cached_property
    def category(self) -> Category:
        return categorize(self)

    def to_record(self) -> dict:
        rec: dict = {"id": self.id, "stem": self.stem, "options": list(self.options)}
        if self.answer_index is not None:
            rec["answer"] = self.answer_index
        if self.split is not None:
            rec["split"] = self.split
        return rec


def categorize(q: ScQuestion) -> Category:
    usable = [s for i, s in enumerate(q.segments) if i not in q.mismatched]
    if not usable:
        raise QuestionError(f"question {q.id}: no option matches the {q.n_blanks} blank(s)")
    many_token = any(len(seg.split()) > 1 for segs in usable for seg in segs)
    if q.n_blanks == 1:
        return Category.C2 if many_token else Category.C1
    return Category.C4 if many_token else Category.C3


def parse_question(record: dict | str, blank_pattern: str = BLANK_PATTERN, separator: str = SEPARATOR) -> ScQuestion:
    if isinstance(record, str):
        try:
            record = json.loads(record)
        except json.JSONDecodeError as exc:
            raise ParseError("record", f"invalid JSON ({exc.msg})") from None
    if not isinstance(record, dict):
        raise ParseError("record", "expected a JSON object")
    stem = record.get("stem")
    if not isinstance(stem, str):
        raise ParseError("stem", "missing or not a string")
    options = record.get("options")
    if not isinstance(options, list) or not all(isinstance(o, str) for o in options):
        raise ParseError("options", "missing or not an array of strings")
    qid = record.get("id", "")
    if not isinstance(qid, str):
        raise ParseError("id", "not a string")
    answer = record.get("answer")
    if answer is not None and (isinstance(answer, bool) or not isinstance(answer, int)):
        raise ParseError("answer", "not an integer")
    split = record.get("split")
    if split is not None and not isinstance(split, str):
        raise ParseError("split", "not a string")
    return ScQuestion(qid, stem, tuple(options), answer, split, blank_pattern, separator)


def expand(q: ScQuestion, strict: bool = True) -> list[FilledCandidate]:
    """Fill every option into the stem.

    With ``strict=False`` unfillable options are skipped; callers can find
    them through ``q.mismatched``.
    """
    out = []
    for i, segs in enumerate(q.segments):
        if segs is None:
            if strict:
                raise QuestionError(f"question {q.id}: option {i} cannot be split")
            continue
        try:
            sentence = fill(q.stem, segs, q.blank_pattern)
        except FillError:
            if strict:
                raise
            continue
        label = None if q.answer_index is None else i == q.answer_index
        out.append(FilledCandidate(q.id, i, sentence, label))
    return out


def read_questions(path) -> list[ScQuestion]:
    with open(path, encoding="utf-8") as fh:
        return [parse_question(line) for line in fh if line.strip()]


def iter_records(questions: Iterable[ScQuestion]) -> Iterator[str]:
    for q in questions:
        yield json.dumps(q.to_record(), ensure_ascii=False)


def write_questions(path, questions: Iterable[ScQuestion]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for line in iter_records(questions):
            fh.write(line + "\n")
