"""Word-level tokenizer with a fixed special-token layout."""
from __future__ import annotations

import re
from collections import Counter
from typing import Iterable

import numpy as np

PAD, BOS, EOS, UNK, MASK = 0, 1, 2, 3, 4
SPECIALS = ("<pad>", "<s>", "</s>", "<unk>", "<mask>")

# apostrophes inside a word stay attached (can't, john's); everything else in
# the punctuation set is split off
_token_re = re.compile(r"[a-z0-9]+(?:'[a-z0-9]+)*|[.,!?;:'\"—-]|[^\sa-z0-9.,!?;:'\"—-]+")


def _lower_ascii(text: str) -> str:
    return "".join(c.lower() if "A" <= c <= "Z" else c for c in text)


def tokenize(text: str) -> list[str]:
    return _token_re.findall(_lower_ascii(text))


class SequenceTooLong(ValueError):
    pass


class Vocab:
    def __init__(self, tokens: Iterable[str]):
        self.itos: list[str] = list(SPECIALS)
        for tok in tokens:
            if tok in SPECIALS:
                raise ValueError(f"token {tok!r} collides with a special token")
            self.itos.append(tok)
        self.stoi = {t: i for i, t in enumerate(self.itos)}
        if len(self.stoi) != len(self.itos):
            raise ValueError("duplicate tokens in vocabulary")

    def __len__(self) -> int:
        return len(self.itos)

    def __contains__(self, token: str) -> bool:
        return token in self.stoi

    def __eq__(self, other) -> bool:
        return isinstance(other, Vocab) and self.itos == other.itos

    @property
    def size(self) -> int:
        return len(self.itos)

    def id_of(self, token: str) -> int:
        return self.stoi.get(token, UNK)

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(f"VOCAB v1 {self.size}\n")
            for i in range(len(SPECIALS), self.size):
                fh.write(f"{i}\t{self.itos[i]}\n")

    @classmethod
    def load(cls, path) -> "Vocab":
        with open(path, encoding="utf-8") as fh:
            header = fh.readline().split()
            if header[:2] != ["VOCAB", "v1"] or len(header) != 3:
                raise ValueError(f"{path}: not a VOCAB v1 file")
            size = int(header[2])
            tokens = []
            for expected, line in enumerate(fh, start=len(SPECIALS)):
                idx, tok = line.rstrip("\n").split("\t", 1)
                if int(idx) != expected:
                    raise ValueError(f"{path}: id {idx} out of order (expected {expected})")
                tokens.append(tok)
        vocab = cls(tokens)
        if vocab.size != size:
            raise ValueError(f"{path}: header says {size} entries, found {vocab.size}")
        return vocab


def build_vocab(corpus: Iterable[str], min_freq: int = 1) -> Vocab:
    if min_freq < 1:
        raise ValueError("min_freq must be >= 1")
    counts: Counter[str] = Counter()
    n_texts = 0
    for text in corpus:
        n_texts += 1
        counts.update(tokenize(text))
    if n_texts == 0:
        raise ValueError("cannot build a vocabulary from an empty corpus")
    kept = sorted((t for t, c in counts.items() if c >= min_freq and t not in SPECIALS),
                  key=lambda t: (-counts[t], t))
    return Vocab(kept)


def encode(text: str, vocab: Vocab, max_len: int | None = None) -> list[int]:
    ids = [BOS] + [vocab.id_of(t) for t in tokenize(text)] + [EOS]
    if max_len is not None and len(ids) > max_len:
        raise SequenceTooLong(f"sequence of {len(ids)} tokens exceeds max_len={max_len}")
    return ids


def decode(ids: Iterable[int], vocab: Vocab) -> str:
    words = []
    for i in ids:
        i = int(i)
        if not 0 <= i < vocab.size:
            raise IndexError(f"token id {i} outside [0, {vocab.size})")
        if i >= len(SPECIALS):
            words.append(vocab.itos[i])
    return " ".join(words)


def pad_batch(seqs: list[list[int]]) -> tuple[np.ndarray, np.ndarray]:
    """Right-pad id lists; returns (ids, mask) where mask marks real tokens."""
    width = max(len(s) for s in seqs)
    ids = np.full((len(seqs), width), PAD, dtype=np.int64)
    mask = np.zeros((len(seqs), width), dtype=bool)
    for row, s in enumerate(seqs):
        ids[row, :len(s)] = s
        mask[row, :len(s)] = True
    return ids, mask
