"""Miniature encoder-decoder transformer with a binary option head and a tied LM head.

Inputs are batches of right-padded id rows ``(B, n)`` with a boolean mask of
real tokens.  The decoder reads the same sequence as the encoder (no shift).
"""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass

import numpy as np

from . import tensorcore as tc
from .tensorcore import Tensor
from .tokenizer import PAD

NEG_FILL = -1e9


@dataclass(frozen=True)
class ModelConfig:
    d: int = 64
    enc_layers: int = 2
    dec_layers: int = 2
    heads: int = 4
    ffn: int = 128
    head_hidden: int | None = None  # defaults to 4*d; 1024 reproduces the published head
    vocab_size: int = 100
    max_len: int = 64
    seed: int = 0
    precision: str = "f32"

    def __post_init__(self):
        if self.head_hidden is None:
            object.__setattr__(self, "head_hidden", 4 * self.d)
        for name in ("d", "heads", "ffn", "vocab_size", "max_len"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.enc_layers < 0 or self.dec_layers < 0:
            raise ValueError("layer counts must be non-negative")
        if self.d % self.heads:
            raise ValueError(f"heads={self.heads} must divide d={self.d}")
        if self.head_hidden < 2:
            raise ValueError("head_hidden must be >= 2")
        if self.max_len < 3:
            raise ValueError("max_len must be >= 3")
        tc.resolve_dtype(self.precision)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ModelConfig":
        fields = {f.name for f in dataclasses.fields(cls)}
        return cls(**{k: v for k, v in d.items() if k in fields})


def _param_shapes(cfg: ModelConfig) -> list[tuple[str, tuple[int, ...], str]]:
    """(name, shape, init) in the fixed order used for init and serialisation."""
    d, f = cfg.d, cfg.ffn
    out = [
        ("tok_emb", (cfg.vocab_size, d), "normal"),
        ("pos_emb", (cfg.max_len, d), "normal"),
    ]

    def attn(prefix):
        return [
            (f"{prefix}.wq", (d, d), "normal"), (f"{prefix}.bq", (d,), "zeros"),
            (f"{prefix}.wk", (d, d), "normal"), (f"{prefix}.bk", (d,), "zeros"),
            (f"{prefix}.wv", (d, d), "normal"), (f"{prefix}.bv", (d,), "zeros"),
            (f"{prefix}.wo", (d, d), "normal"), (f"{prefix}.bo", (d,), "zeros"),
        ]

    def norm(prefix):
        return [(f"{prefix}.g", (d,), "ones"), (f"{prefix}.b", (d,), "zeros")]

    def ffn(prefix):
        return [
            (f"{prefix}.w1", (d, f), "normal"), (f"{prefix}.b1", (f,), "zeros"),
            (f"{prefix}.w2", (f, d), "normal"), (f"{prefix}.b2", (d,), "zeros"),
        ]

    for i in range(cfg.enc_layers):
        p = f"enc{i}"
        out += norm(f"{p}.ln1") + attn(f"{p}.self") + norm(f"{p}.ln2") + ffn(f"{p}.ffn")
    if cfg.enc_layers:
        out += norm("enc.ln_f")
    for i in range(cfg.dec_layers):
        p = f"dec{i}"
        out += (norm(f"{p}.ln1") + attn(f"{p}.self") + norm(f"{p}.ln2") + attn(f"{p}.cross")
                + norm(f"{p}.ln3") + ffn(f"{p}.ffn"))
    if cfg.dec_layers:
        out += norm("dec.ln_f")
    h = cfg.head_hidden
    out += [
        ("head.w0", (h, d), "normal"), ("head.b0", (h,), "zeros"),
        ("head.w1", (2, h), "normal"), ("head.b1", (2,), "zeros"),
    ]
    return out


class Seq2Seq:
    def __init__(self, config: ModelConfig, params: dict[str, np.ndarray] | None = None):
        self.config = config
        self.dtype = tc.resolve_dtype(config.precision)
        shapes = _param_shapes(config)
        if params is None:
            rng = np.random.default_rng(config.seed)
            params = {}
            for name, shape, init in shapes:
                if init == "normal":
                    params[name] = rng.normal(0.0, 0.02, size=shape)
                elif init == "ones":
                    params[name] = np.ones(shape)
                else:
                    params[name] = np.zeros(shape)
        missing = [n for n, _, _ in shapes if n not in params]
        if missing:
            raise KeyError(f"missing parameters: {missing[:5]}")
        self.params: dict[str, Tensor] = {}
        for name, shape, _ in shapes:
            arr = np.array(params[name], dtype=self.dtype)
            if arr.shape != shape:
                raise tc.ShapeError(f"{name}: expected {shape}, got {arr.shape}")
            self.params[name] = Tensor(arr, requires_grad=True, name=name)

    def __getitem__(self, name: str) -> Tensor:
        return self.params[name]

    # -- persistence -------------------------------------------------------

    def save(self, path) -> None:
        tc.save_weights(path, self.config.to_dict(), ((n, t.data) for n, t in self.params.items()))

    @classmethod
    def load(cls, path) -> "Seq2Seq":
        config, arrays = tc.load_weights(path)
        return cls(ModelConfig.from_dict(config), arrays)

    def zero_grad(self) -> None:
        for p in self.params.values():
            p.grad = None

    def n_parameters(self) -> int:
        return sum(p.data.size for p in self.params.values())

    # -- building blocks ---------------------------------------------------

    def _check_ids(self, ids: np.ndarray) -> np.ndarray:
        ids = np.atleast_2d(np.asarray(ids, dtype=np.int64))
        n = ids.shape[1]
        if n > self.config.max_len:
            raise ValueError(f"sequence length {n} exceeds max_len={self.config.max_len}")
        if ids.min() < 0 or ids.max() >= self.config.vocab_size:
            raise IndexError(f"token id outside [0, {self.config.vocab_size})")
        return ids

    def embed(self, ids) -> Tensor:
        ids = self._check_ids(ids)
        n = ids.shape[1]
        tok = tc.embedding_lookup(self["tok_emb"], ids)
        pos = tc.getitem(self["pos_emb"], slice(0, n))
        return tok + pos

    def _norm(self, x: Tensor, prefix: str) -> Tensor:
        return tc.layer_norm(x, self[f"{prefix}.g"], self[f"{prefix}.b"], eps=1e-5)

    def _attention(self, prefix: str, x: Tensor, memory: Tensor, allowed: np.ndarray) -> Tensor:
        """Multi-head attention; ``allowed`` is (B, 1, nq, nk) or broadcastable."""
        cfg = self.config
        B, nq, d = x.shape
        nk = memory.shape[1]
        A, dh = cfg.heads, d // cfg.heads

        def heads(t, n):
            return tc.transpose(tc.reshape(t, (B, n, A, dh)), (0, 2, 1, 3))

        q = heads(tc.linear(x, self[f"{prefix}.wq"], self[f"{prefix}.bq"]), nq)
        k = heads(tc.linear(memory, self[f"{prefix}.wk"], self[f"{prefix}.bk"]), nk)
        v = heads(tc.linear(memory, self[f"{prefix}.wv"], self[f"{prefix}.bv"]), nk)
        scores = tc.matmul(q, tc.transpose(k, (0, 1, 3, 2))) * (1.0 / math.sqrt(dh))
        scores = tc.masked_fill(scores, ~allowed, NEG_FILL)
        weights = tc.softmax(scores, axis=-1)
        ctx = tc.matmul(weights, v)
        ctx = tc.reshape(tc.transpose(ctx, (0, 2, 1, 3)), (B, nq, d))
        return tc.linear(ctx, self[f"{prefix}.wo"], self[f"{prefix}.bo"])

    def _ffn(self, prefix: str, x: Tensor) -> Tensor:
        hidden = tc.relu(tc.linear(x, self[f"{prefix}.w1"], self[f"{prefix}.b1"]))
        return tc.linear(hidden, self[f"{prefix}.w2"], self[f"{prefix}.b2"])

    # -- public forward pieces ---------------------------------------------

    def encode(self, E: Tensor, pad_mask: np.ndarray) -> Tensor:
        pad_mask = np.atleast_2d(pad_mask)
        allowed = pad_mask[:, None, None, :]
        x = E
        for i in range(self.config.enc_layers):
            p = f"enc{i}"
            h = self._norm(x, f"{p}.ln1")
            x = x + self._attention(f"{p}.self", h, h, allowed)
            x = x + self._ffn(f"{p}.ffn", self._norm(x, f"{p}.ln2"))
        if self.config.enc_layers:
            x = self._norm(x, "enc.ln_f")
        return x

    def decode(self, E: Tensor, H: Tensor, pad_mask: np.ndarray) -> Tensor:
        pad_mask = np.atleast_2d(pad_mask)
        n = E.shape[1]
        causal = np.tril(np.ones((n, n), dtype=bool))
        self_allowed = causal[None, None, :, :] & pad_mask[:, None, None, :]
        cross_allowed = pad_mask[:, None, None, :]
        x = E
        for i in range(self.config.dec_layers):
            p = f"dec{i}"
            h = self._norm(x, f"{p}.ln1")
            x = x + self._attention(f"{p}.self", h, h, self_allowed)
            x = x + self._attention(f"{p}.cross", self._norm(x, f"{p}.ln2"), H, cross_allowed)
            x = x + self._ffn(f"{p}.ffn", self._norm(x, f"{p}.ln3"))
        if self.config.dec_layers:
            x = self._norm(x, "dec.ln_f")
        return x

    def forward(self, ids, pad_mask=None) -> Tensor:
        """Decoder states (B, n, d) for a padded id batch."""
        ids = self._check_ids(ids)
        if pad_mask is None:
            pad_mask = ids != PAD
        E = self.embed(ids)
        H = self.encode(E, pad_mask)
        return self.decode(E, H, pad_mask)

    def classify_logits(self, t_last: Tensor) -> Tensor:
        """Head logits x (..., 2): index 0 = wrong option, 1 = right option."""
        hidden = tc.tanh(tc.matmul(t_last, tc.transpose(self["head.w0"], (1, 0))) + self["head.b0"])
        return tc.matmul(hidden, tc.transpose(self["head.w1"], (1, 0))) + self["head.b1"]

    def classify(self, t_last: Tensor) -> Tensor:
        return tc.softmax(self.classify_logits(t_last), axis=-1)

    def lm_logits(self, states: Tensor) -> Tensor:
        return tc.matmul(states, tc.transpose(self["tok_emb"], (1, 0)))

    def final_states(self, states: Tensor, pad_mask: np.ndarray) -> Tensor:
        """Decoder state at each row's last real token (EOS)."""
        pad_mask = np.atleast_2d(pad_mask)
        last = pad_mask.sum(axis=1) - 1
        return tc.getitem(states, (np.arange(states.shape[0]), last))

    def option_logits(self, ids, pad_mask=None) -> Tensor:
        ids = self._check_ids(ids)
        if pad_mask is None:
            pad_mask = ids != PAD
        states = self.forward(ids, pad_mask)
        return self.classify_logits(self.final_states(states, pad_mask))

    def p_right_ids(self, ids, pad_mask=None) -> np.ndarray:
        with tc.no_grad():
            return tc.softmax(self.option_logits(ids, pad_mask), axis=-1).data[:, 1].astype(np.float64)
