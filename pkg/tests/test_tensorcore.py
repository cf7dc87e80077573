import zlib

import mpmath
import numpy as np
import numpy.testing as npt
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from scsolve import tensorcore as tc
from scsolve.tensorcore import Tensor

from gradcheck import numeric_grad, relative_error


def leaf(arr):
    return Tensor(np.asarray(arr, dtype=np.float64), requires_grad=True)


def test_softmax_symmetric():
    npt.assert_allclose(tc.softmax(Tensor([0.0, 0.0])).data, [0.5, 0.5])


def test_matmul_identity():
    x = np.random.default_rng(0).normal(size=(3, 5))
    npt.assert_array_equal(tc.matmul(Tensor(np.eye(3)), Tensor(x)).data, x)


def test_layer_norm_constant_vector_is_zero():
    # the mean of a constant row carries rounding residue, hence atol
    out = tc.layer_norm(Tensor(np.full((2, 6), 3.7)))
    npt.assert_allclose(out.data, 0.0, atol=1e-9)


def test_layer_norm_stats():
    x = np.random.default_rng(1).normal(3, 2, size=(4, 16))
    out = tc.layer_norm(Tensor(x)).data
    npt.assert_allclose(out.mean(-1), 0, atol=1e-12)
    npt.assert_allclose(out.var(-1), 1, atol=1e-4)


def test_cross_entropy_uniform():
    assert tc.cross_entropy(Tensor([[0.0, 0.0]]), [1]).item() == pytest.approx(np.log(2), abs=1e-12)


@pytest.mark.parametrize("label", [0, 1])
def test_cross_entropy_against_high_precision(label):
    mpmath.mp.dps = 50
    p_right = mpmath.e ** 10 / (1 + mpmath.e ** 10)
    expected = -mpmath.log(p_right if label == 1 else 1 - p_right)
    got = tc.cross_entropy(Tensor([[0.0, 10.0]]), [label]).item()
    assert got == pytest.approx(float(expected), rel=1e-10)
    assert got == pytest.approx(4.54e-5 if label else 10.0000454, rel=1e-3)


def test_cross_entropy_rejects_bad_label():
    with pytest.raises(ValueError):
        tc.cross_entropy(Tensor([[0.0, 1.0]]), [2])


def test_shape_errors_name_both_shapes():
    with pytest.raises(tc.ShapeError, match=r"\(2, 3\).*\(2, 3\)"):
        tc.matmul(Tensor(np.ones((2, 3))), Tensor(np.ones((2, 3))))
    with pytest.raises(tc.ShapeError):
        tc.add(Tensor(np.ones((2, 3))), Tensor(np.ones((4,))))


def test_non_finite_forward_raises():
    with pytest.raises(tc.NumericError):
        tc.exp(Tensor([1000.0]))


def test_backward_needs_scalar():
    with pytest.raises(tc.ShapeError):
        (leaf([1.0, 2.0]) * 2.0).backward()


def test_sum_gradient_is_ones():
    x = leaf(np.random.default_rng(2).normal(size=(3, 4)))
    tc.sum(x).backward()
    npt.assert_array_equal(x.grad, np.ones((3, 4)))


def test_dot_gradient_is_twice_x():
    x = leaf(np.random.default_rng(3).normal(size=5))
    tc.sum(x * x).backward()
    npt.assert_allclose(x.grad, 2 * x.data)


def test_reuse_accumulates_both_paths():
    rng = np.random.default_rng(4)
    x = leaf(rng.normal(size=4))
    w = rng.normal(size=4)
    tc.sum(tc.tanh(x) * w + x * x).backward()
    combined = x.grad.copy()
    x.grad = None
    tc.sum(tc.tanh(x) * w).backward()
    first = x.grad.copy()
    x.grad = None
    tc.sum(x * x).backward()
    npt.assert_allclose(combined, first + x.grad, rtol=1e-12)


def test_leaf_gradients_accumulate_across_calls():
    x = leaf([1.0, 2.0])
    tc.sum(x).backward()
    tc.sum(x).backward()
    npt.assert_array_equal(x.grad, [2.0, 2.0])


def test_no_grad_records_nothing():
    x = leaf([1.0])
    with tc.no_grad():
        y = x * 3.0
    assert not y.requires_grad


OPS = {
    "matmul": lambda a, b: tc.matmul(a, b),
    "add_broadcast": lambda a, b: tc.add(a, tc.getitem(b, (slice(None), 0))),
    "mul": lambda a, b: tc.mul(a, tc.transpose(b, (1, 0))),
    "sub": lambda a, b: tc.sub(a, tc.transpose(b, (1, 0))),
    "tanh": lambda a, b: tc.tanh(a),
    "relu": lambda a, b: tc.relu(a),
    "softmax": lambda a, b: tc.softmax(a, axis=-1),
    "log_softmax": lambda a, b: tc.log_softmax(a, axis=0),
    "layer_norm": lambda a, b: tc.layer_norm(a, eps=1e-5),
    "concat": lambda a, b: tc.concat([a, tc.transpose(b, (1, 0))], axis=0),
    "reshape": lambda a, b: tc.reshape(a, (2, 6)),
    "slice": lambda a, b: a[1:, ::2],
    "mean": lambda a, b: tc.mean(a, axis=1),
    "masked_fill": lambda a, b: tc.masked_fill(a, np.eye(3, 4, dtype=bool), -5.0),
    "exp": lambda a, b: tc.exp(a),
}


@pytest.mark.parametrize("name", sorted(OPS))
def test_op_gradients_match_finite_differences(name):
    rng = np.random.default_rng(zlib.crc32(name.encode()))
    a = leaf(rng.normal(size=(3, 4)))
    b = leaf(rng.normal(size=(4, 3)))
    proj = rng.normal(size=OPS[name](a, b).shape)

    def loss():
        return tc.sum(OPS[name](a, b) * proj)

    loss().backward()
    for t in (a, b):
        analytic = t.grad if t.grad is not None else np.zeros_like(t.data)
        assert relative_error(analytic, numeric_grad(loss, t.data)).max() < 1e-5


def test_embedding_lookup_gradient_scatters():
    table = leaf(np.random.default_rng(5).normal(size=(6, 3)))
    ids = np.array([[1, 4, 1], [0, 1, 5]])
    proj = np.random.default_rng(6).normal(size=(2, 3, 3))

    def loss():
        return tc.sum(tc.embedding_lookup(table, ids) * proj)

    loss().backward()
    assert relative_error(table.grad, numeric_grad(loss, table.data)).max() < 1e-5
    npt.assert_array_equal(table.grad[[2, 3]], 0.0)


def test_embedding_lookup_range():
    with pytest.raises(IndexError):
        tc.embedding_lookup(Tensor(np.ones((4, 2))), [4])


def test_weighted_cross_entropy_gradient():
    logits = leaf(np.random.default_rng(7).normal(size=(5, 2)))
    labels = np.array([0, 1, 1, 0, 1])
    weights = np.array([1.0, 3.0, 1.0, 1.0, 3.0])

    def loss():
        return tc.cross_entropy(logits, labels, weights)

    loss().backward()
    assert relative_error(logits.grad, numeric_grad(loss, logits.data)).max() < 1e-5


def test_random_one_layer_network_gradcheck():
    rng = np.random.default_rng(8)
    x = rng.normal(size=(6, 5))
    w0, b0 = leaf(rng.normal(size=(5, 7))), leaf(rng.normal(size=7))
    w1, b1 = leaf(rng.normal(size=(7, 2))), leaf(rng.normal(size=2))
    labels = rng.integers(0, 2, size=6)

    def loss():
        return tc.cross_entropy(tc.linear(tc.tanh(tc.linear(Tensor(x), w0, b0)), w1, b1), labels)

    loss().backward()
    for p in (w0, b0, w1, b1):
        assert relative_error(p.grad, numeric_grad(loss, p.data)).max() < 1e-5


def test_f32_gradcheck_within_looser_bound():
    rng = np.random.default_rng(9)
    x = Tensor(rng.normal(size=(4, 3)).astype(np.float32), requires_grad=True)
    w = rng.normal(size=(4, 3)).astype(np.float32)

    def loss():
        return tc.sum(tc.tanh(x) * w)

    loss().backward()
    assert x.grad.dtype == np.float32
    num = numeric_grad(loss, x.data, h=1e-2)
    assert relative_error(x.grad, num, floor=1e-3).max() < 1e-3


@settings(max_examples=50, deadline=None)
@given(hnp.arrays(np.float64, hnp.array_shapes(min_dims=2, max_dims=3, max_side=6),
                  elements=st.floats(-50, 50)))
def test_softmax_rows_are_distributions(x):
    y = tc.softmax(Tensor(x), axis=-1).data
    assert (y >= 0).all() and (y <= 1).all()
    npt.assert_allclose(y.sum(-1), 1.0, atol=1e-6)


def test_forward_is_deterministic():
    rng = np.random.default_rng(10)
    a, b = rng.normal(size=(5, 8)).astype(np.float32), rng.normal(size=(8, 3)).astype(np.float32)
    first = tc.softmax(tc.matmul(Tensor(a), Tensor(b))).data
    second = tc.softmax(tc.matmul(Tensor(a), Tensor(b))).data
    assert first.tobytes() == second.tobytes()


# -- Adam -------------------------------------------------------------------

def test_adam_zero_gradient_leaves_params():
    p = {"w": Tensor(np.array([1.0, -2.0]))}
    tc.adam_step(p, {"w": np.zeros(2)}, tc.AdamState(), lr=0.1)
    npt.assert_array_equal(p["w"].data, [1.0, -2.0])


def test_adam_first_step_moves_by_lr():
    p = {"w": Tensor(np.array([0.0, 0.0]))}
    tc.adam_step(p, {"w": np.array([0.3, -7.0])}, tc.AdamState(), lr=0.01)
    npt.assert_allclose(p["w"].data, [-0.01, 0.01], rtol=1e-6)


def test_adam_descends_quadratic():
    w = Tensor(np.array([0.0]), requires_grad=True)
    state = tc.AdamState()
    for _ in range(100):
        w.grad = None
        loss = tc.sum((w - 3.0) * (w - 3.0))
        loss.backward()
        tc.adam_step({"w": w}, {"w": w.grad}, state, lr=0.1)
    assert abs(w.data[0] - 3.0) < 0.2


def test_adam_shape_mismatch():
    with pytest.raises(tc.ShapeError):
        tc.adam_step({"w": Tensor(np.zeros(2))}, {"w": np.zeros(3)}, tc.AdamState(), lr=0.1)


# -- weight file ------------------------------------------------------------

def test_weight_file_round_trip(tmp_path):
    arrays = [("a", np.arange(6, dtype=np.float32).reshape(2, 3)), ("b.c", np.array([1.5, -2.0]))]
    path = tmp_path / "w.bin"
    tc.save_weights(path, {"d": 4}, arrays)
    assert path.read_bytes().startswith(b"WEIGHTS v1\n")
    config, loaded = tc.load_weights(path)
    assert config == {"d": 4}
    assert list(loaded) == ["a", "b.c"]
    for name, arr in arrays:
        assert loaded[name].dtype == arr.dtype
        npt.assert_array_equal(loaded[name], arr)


def test_weight_file_rejects_other_formats(tmp_path):
    path = tmp_path / "junk.bin"
    path.write_bytes(b"not weights\n")
    with pytest.raises(ValueError):
        tc.load_weights(path)
