"""Dense tensors with a reverse-mode autodiff tape, backed by numpy.

Every forward op returns a new :class:`Tensor` that remembers its parents and a
closure computing the parents' gradient contributions.  ``Tensor.backward``
walks that graph in reverse topological order.
"""
from __future__ import annotations

import contextlib
import json
import struct
from typing import Callable, Iterable, Sequence

import numpy as np

DTYPES = {"f32": np.float32, "f64": np.float64}

_grad_enabled = True


class ShapeError(ValueError):
    pass


class NumericError(ArithmeticError):
    pass


@contextlib.contextmanager
def no_grad():
    """Disable graph recording inside the block (inference, optimizer updates)."""
    global _grad_enabled
    prev = _grad_enabled
    _grad_enabled = False
    try:
        yield
    finally:
        _grad_enabled = prev


def resolve_dtype(precision) -> np.dtype:
    if isinstance(precision, str):
        try:
            return np.dtype(DTYPES[precision])
        except KeyError:
            raise ValueError(f"unknown precision {precision!r}; expected f32 or f64") from None
    return np.dtype(precision)


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward", "name")

    def __init__(self, data, requires_grad: bool = False, dtype=None, name: str | None = None):
        arr = np.asarray(data, dtype=dtype)
        if arr.dtype.kind != "f":
            arr = arr.astype(np.float64)
        if arr.ndim and 0 in arr.shape:
            raise ShapeError(f"tensor extents must be positive, got {arr.shape}")
        self.data = arr
        self.grad: np.ndarray | None = None
        self.requires_grad = requires_grad
        self._parents: tuple[Tensor, ...] = ()
        self._backward: Callable[[np.ndarray], Sequence[np.ndarray | None]] | None = None
        self.name = name

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def dtype(self):
        return self.data.dtype

    @property
    def ndim(self) -> int:
        return self.data.ndim

    def numpy(self) -> np.ndarray:
        return self.data

    def item(self) -> float:
        return float(self.data)

    def zero_grad(self) -> None:
        self.grad = None

    def __repr__(self) -> str:
        return f"Tensor(shape={self.shape}, dtype={self.dtype}, requires_grad={self.requires_grad})"

    def backward(self) -> None:
        if self.data.size != 1:
            raise ShapeError(f"backward needs a scalar loss, got shape {self.shape}")
        order = _topo_order(self)
        grads: dict[int, np.ndarray] = {id(self): np.ones_like(self.data)}
        for node in reversed(order):
            g = grads.pop(id(node), None)
            if g is None:
                continue
            if node._backward is None:
                # leaf
                if node.requires_grad:
                    node.grad = g.copy() if node.grad is None else node.grad + g
                continue
            for parent, pg in zip(node._parents, node._backward(g)):
                if pg is None or not parent.requires_grad:
                    continue
                key = id(parent)
                if key in grads:
                    grads[key] = grads[key] + pg
                else:
                    grads[key] = pg

    # operator sugar
    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __neg__(self):
        return mul(self, -1.0)

    def __matmul__(self, other):
        return matmul(self, other)

    def __getitem__(self, index):
        return getitem(self, index)


def _topo_order(root: Tensor) -> list[Tensor]:
    order: list[Tensor] = []
    seen: set[int] = set()
    stack = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for p in node._parents:
            if id(p) not in seen and p.requires_grad:
                stack.append((p, False))
    return order


def as_tensor(x, like: Tensor | None = None) -> Tensor:
    if isinstance(x, Tensor):
        return x
    dtype = like.dtype if like is not None else None
    return Tensor(np.asarray(x, dtype=dtype))


def _check_finite(arr: np.ndarray, op: str) -> None:
    if not np.isfinite(arr).all():
        raise NumericError(f"non-finite values produced by {op}")


def _make(data: np.ndarray, parents: tuple[Tensor, ...], backward, op: str) -> Tensor:
    _check_finite(data, op)
    out = Tensor(data)
    if _grad_enabled and any(p.requires_grad for p in parents):
        out.requires_grad = True
        out._parents = parents
        out._backward = backward
    return out


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, extent in enumerate(shape):
        if extent == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def _broadcast_shape(a: Tensor, b: Tensor, op: str) -> None:
    try:
        np.broadcast_shapes(a.shape, b.shape)
    except ValueError:
        raise ShapeError(f"{op}: incompatible shapes {a.shape} and {b.shape}") from None


# ---------------------------------------------------------------------------
# elementwise
# ---------------------------------------------------------------------------

def add(a, b) -> Tensor:
    a, b = _pair(a, b)
    _broadcast_shape(a, b, "add")

    def backward(g):
        return _unbroadcast(g, a.shape), _unbroadcast(g, b.shape)

    return _make(a.data + b.data, (a, b), backward, "add")


def sub(a, b) -> Tensor:
    a, b = _pair(a, b)
    _broadcast_shape(a, b, "sub")

    def backward(g):
        return _unbroadcast(g, a.shape), _unbroadcast(-g, b.shape)

    return _make(a.data - b.data, (a, b), backward, "sub")


def mul(a, b) -> Tensor:
    a, b = _pair(a, b)
    _broadcast_shape(a, b, "mul")

    def backward(g):
        return _unbroadcast(g * b.data, a.shape), _unbroadcast(g * a.data, b.shape)

    return _make(a.data * b.data, (a, b), backward, "mul")


def _pair(a, b) -> tuple[Tensor, Tensor]:
    if isinstance(a, Tensor):
        return a, as_tensor(b, like=a)
    b = as_tensor(b)
    return as_tensor(a, like=b), b


def tanh(x: Tensor) -> Tensor:
    y = np.tanh(x.data)

    def backward(g):
        return (g * (1.0 - y * y),)

    return _make(y, (x,), backward, "tanh")


def relu(x: Tensor) -> Tensor:
    pos = x.data > 0
    y = np.where(pos, x.data, 0).astype(x.dtype)

    def backward(g):
        return (g * pos,)

    return _make(y, (x,), backward, "relu")


def exp(x: Tensor) -> Tensor:
    with np.errstate(over="ignore"):
        y = np.exp(x.data)

    def backward(g):
        return (g * y,)

    return _make(y, (x,), backward, "exp")


def log(x: Tensor) -> Tensor:
    if (x.data <= 0).any():
        raise NumericError("log of non-positive value")
    y = np.log(x.data)

    def backward(g):
        return (g / x.data,)

    return _make(y, (x,), backward, "log")


def masked_fill(x: Tensor, mask: np.ndarray, value: float) -> Tensor:
    """Replace entries where ``mask`` is True by the constant ``value``."""
    mask = np.broadcast_to(np.asarray(mask, dtype=bool), x.shape)
    y = np.where(mask, x.dtype.type(value), x.data)

    def backward(g):
        return (np.where(mask, 0, g).astype(g.dtype),)

    return _make(y, (x,), backward, "masked_fill")


# ---------------------------------------------------------------------------
# reductions and shape ops
# ---------------------------------------------------------------------------

def sum(x: Tensor, axis=None, keepdims: bool = False) -> Tensor:  # noqa: A001
    y = np.asarray(x.data.sum(axis=axis, keepdims=keepdims))

    def backward(g):
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g, x.shape).copy(),)

    return _make(y, (x,), backward, "sum")


def mean(x: Tensor, axis=None, keepdims: bool = False) -> Tensor:
    count = x.data.size if axis is None else np.prod([x.shape[a] for a in np.atleast_1d(axis)])
    return mul(sum(x, axis=axis, keepdims=keepdims), 1.0 / count)


def reshape(x: Tensor, shape: Sequence[int]) -> Tensor:
    y = x.data.reshape(shape)

    def backward(g):
        return (g.reshape(x.shape),)

    return _make(y, (x,), backward, "reshape")


def transpose(x: Tensor, axes: Sequence[int]) -> Tensor:
    axes = tuple(axes)
    inverse = tuple(np.argsort(axes))
    y = x.data.transpose(axes)

    def backward(g):
        return (g.transpose(inverse),)

    return _make(y, (x,), backward, "transpose")


def getitem(x: Tensor, index) -> Tensor:
    y = np.asarray(x.data[index])
    if y.ndim and 0 in y.shape:
        raise ShapeError(f"slice {index!r} of shape {x.shape} is empty")

    def backward(g):
        full = np.zeros_like(x.data)
        np.add.at(full, index, g)
        return (full,)

    return _make(y.copy(), (x,), backward, "slice")


slice_ = getitem


def concat(tensors: Sequence[Tensor], axis: int = 0) -> Tensor:
    tensors = list(tensors)
    try:
        y = np.concatenate([t.data for t in tensors], axis=axis)
    except ValueError:
        raise ShapeError(f"concat: incompatible shapes {[t.shape for t in tensors]}") from None
    bounds = np.cumsum([t.shape[axis] for t in tensors])[:-1]

    def backward(g):
        return tuple(np.split(g, bounds, axis=axis))

    return _make(y, tuple(tensors), backward, "concat")


# ---------------------------------------------------------------------------
# linear algebra
# ---------------------------------------------------------------------------

def matmul(a: Tensor, b: Tensor) -> Tensor:
    """Batched matrix product with numpy broadcasting over leading axes."""
    a, b = _pair(a, b)
    if a.ndim < 2 or b.ndim < 2 or a.shape[-1] != b.shape[-2]:
        raise ShapeError(f"matmul: incompatible shapes {a.shape} and {b.shape}")
    try:
        y = np.matmul(a.data, b.data)
    except ValueError:
        raise ShapeError(f"matmul: incompatible shapes {a.shape} and {b.shape}") from None

    def backward(g):
        ga = np.matmul(g, np.swapaxes(b.data, -1, -2)) if a.requires_grad else None
        gb = np.matmul(np.swapaxes(a.data, -1, -2), g) if b.requires_grad else None
        return (
            None if ga is None else _unbroadcast(ga, a.shape),
            None if gb is None else _unbroadcast(gb, b.shape),
        )

    return _make(y, (a, b), backward, "matmul")


def linear(x: Tensor, weight: Tensor, bias: Tensor | None = None) -> Tensor:
    """``x @ weight + bias`` with weight stored as (in, out)."""
    y = matmul(x, weight)
    return y if bias is None else add(y, bias)


def embedding_lookup(table: Tensor, ids) -> Tensor:
    ids = np.asarray(ids)
    if ids.dtype.kind not in "iu":
        raise TypeError("embedding ids must be integers")
    if ids.size and (ids.min() < 0 or ids.max() >= table.shape[0]):
        raise IndexError(f"embedding id out of range [0, {table.shape[0]})")
    y = table.data[ids]

    def backward(g):
        full = np.zeros_like(table.data)
        np.add.at(full, ids.reshape(-1), g.reshape(-1, table.shape[1]))
        return (full,)

    return _make(y, (table,), backward, "embedding_lookup")


# ---------------------------------------------------------------------------
# normalisation and probabilities
# ---------------------------------------------------------------------------

def softmax(x: Tensor, axis: int = -1) -> Tensor:
    shifted = x.data - x.data.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    y = e / e.sum(axis=axis, keepdims=True)

    def backward(g):
        return (y * (g - (g * y).sum(axis=axis, keepdims=True)),)

    return _make(y, (x,), backward, "softmax")


def log_softmax(x: Tensor, axis: int = -1) -> Tensor:
    shifted = x.data - x.data.max(axis=axis, keepdims=True)
    lse = np.log(np.exp(shifted).sum(axis=axis, keepdims=True))
    y = shifted - lse
    p = np.exp(y)

    def backward(g):
        return (g - p * g.sum(axis=axis, keepdims=True),)

    return _make(y, (x,), backward, "log_softmax")


def layer_norm(x: Tensor, gain: Tensor | None = None, shift: Tensor | None = None, eps: float = 1e-5) -> Tensor:
    """Normalise the last axis to zero mean / unit variance, then scale and shift."""
    mu = x.data.mean(axis=-1, keepdims=True)
    xc = x.data - mu
    with np.errstate(over="ignore", invalid="ignore"):
        var = (xc * xc).mean(axis=-1, keepdims=True)
    # an overflowing variance would otherwise normalise silently to zero
    _check_finite(var, "layer_norm")
    inv = 1.0 / np.sqrt(var + eps)
    xhat = (xc * inv).astype(x.dtype)

    def backward(g):
        n = x.shape[-1]
        gx = inv / n * (n * g - g.sum(axis=-1, keepdims=True)
                        - xhat * (g * xhat).sum(axis=-1, keepdims=True))
        return (gx.astype(x.dtype),)

    out = _make(xhat, (x,), backward, "layer_norm")
    if gain is not None:
        out = mul(out, gain)
    if shift is not None:
        out = add(out, shift)
    return out


def cross_entropy(logits: Tensor, labels, weights=None) -> Tensor:
    """Mean of ``-log softmax(logits)[label]`` over the leading axes.

    ``logits`` has classes on the last axis; ``labels`` matches the leading
    shape.  Optional per-row ``weights`` give a weighted mean.
    """
    labels = np.asarray(labels)
    n_classes = logits.shape[-1]
    if labels.shape != logits.shape[:-1]:
        raise ShapeError(f"cross_entropy: labels {labels.shape} vs logits {logits.shape}")
    if labels.dtype.kind not in "iu" or (labels < 0).any() or (labels >= n_classes).any():
        raise ValueError(f"cross_entropy: labels must be integers in [0, {n_classes})")
    logp = log_softmax(logits, axis=-1)
    flat = reshape(logp, (-1, n_classes))
    rows = np.arange(flat.shape[0])
    picked = getitem(flat, (rows, labels.reshape(-1)))
    if weights is None:
        return mul(sum(picked), -1.0 / picked.shape[0])
    w = np.asarray(weights, dtype=logits.dtype).reshape(-1)
    return mul(sum(mul(picked, w)), -1.0 / w.sum())


# ---------------------------------------------------------------------------
# optimisation
# ---------------------------------------------------------------------------

class AdamState:
    def __init__(self):
        self.step = 0
        self.m: dict[str, np.ndarray] = {}
        self.v: dict[str, np.ndarray] = {}


def adam_step(params: dict[str, Tensor], grads: dict[str, np.ndarray | None], state: AdamState,
              lr: float, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8) -> None:
    """In-place Adam update with bias correction; missing gradients count as zero."""
    state.step += 1
    t = state.step
    c1 = 1.0 - beta1 ** t
    c2 = 1.0 - beta2 ** t
    for name, p in params.items():
        g = grads.get(name)
        if g is None:
            g = np.zeros_like(p.data)
        if g.shape != p.shape:
            raise ShapeError(f"adam: gradient for {name} has shape {g.shape}, parameter {p.shape}")
        m = state.m.get(name)
        if m is None:
            m = state.m[name] = np.zeros_like(p.data)
            state.v[name] = np.zeros_like(p.data)
        v = state.v[name]
        m *= beta1
        m += (1.0 - beta1) * g
        v *= beta2
        v += (1.0 - beta2) * g * g
        update = lr * (m / c1) / (np.sqrt(v / c2) + eps)
        p.data -= update.astype(p.dtype)


# ---------------------------------------------------------------------------
# weight file
# ---------------------------------------------------------------------------

WEIGHTS_MAGIC = b"WEIGHTS v1\n"


def save_weights(path, config: dict, arrays: Iterable[tuple[str, np.ndarray]]) -> None:
    """Write the versioned weight container.

    Layout: magic line, one JSON config line, then per array a text header
    ``name dtype d0,d1,...`` followed by the raw little-endian values.
    """
    with open(path, "wb") as fh:
        fh.write(WEIGHTS_MAGIC)
        fh.write(json.dumps(config, sort_keys=True).encode() + b"\n")
        arrays = list(arrays)
        fh.write(f"{len(arrays)}\n".encode())
        for name, arr in arrays:
            arr = np.ascontiguousarray(arr)
            le = arr.astype(arr.dtype.newbyteorder("<"), copy=False)
            dims = ",".join(str(s) for s in arr.shape)
            fh.write(f"{name} {arr.dtype.name} {dims}\n".encode())
            fh.write(struct.pack("<Q", le.nbytes))
            fh.write(le.tobytes())


def load_weights(path) -> tuple[dict, dict[str, np.ndarray]]:
    with open(path, "rb") as fh:
        if fh.readline() != WEIGHTS_MAGIC:
            raise ValueError(f"{path}: not a WEIGHTS v1 file")
        config = json.loads(fh.readline())
        count = int(fh.readline())
        arrays: dict[str, np.ndarray] = {}
        for _ in range(count):
            name, dtype, dims = fh.readline().decode().rstrip("\n").split(" ")
            shape = tuple(int(s) for s in dims.split(",")) if dims else ()
            (nbytes,) = struct.unpack("<Q", fh.read(8))
            raw = fh.read(nbytes)
            if len(raw) != nbytes:
                raise ValueError(f"{path}: truncated array {name}")
            arrays[name] = np.frombuffer(raw, dtype=np.dtype(dtype).newbyteorder("<")).reshape(shape).astype(dtype)
    return config, arrays
