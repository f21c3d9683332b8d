"""Gradient checks for every tensor op against central differences."""

import numpy as np
import pytest

from disambig.autograd import Tensor, concat, masked_row_softmax

from oracles import fd_gradient, relative_error

RNG = np.random.default_rng(42)


def check_grads(build, tensors, tol=1e-6):
    """Backprop through ``build(*tensors)`` and compare each input's
    gradient with central differences."""
    out = build(*tensors)
    out.backward()
    for t in tensors:
        fd = fd_gradient(lambda: build(*tensors).data, t)
        assert relative_error(t.grad, fd) < tol, (t.grad, fd)


def test_add_broadcast_bias():
    a = Tensor(RNG.normal(size=(3, 4)))
    b = Tensor(RNG.normal(size=(4,)))
    check_grads(lambda x, y: (x + y).sum(), [a, b])


def test_mul_and_scalar():
    a = Tensor(RNG.normal(size=(3, 4)))
    b = Tensor(RNG.normal(size=(3, 4)))
    check_grads(lambda x, y: (x * y * 2.5).mean(), [a, b])


def test_sub_neg_rsub():
    a = Tensor(RNG.normal(size=(2, 3)))
    check_grads(lambda x: (1.0 - (-x) - x).sum(), [a])


def test_div():
    a = Tensor(RNG.normal(size=(3, 3)))
    b = Tensor(RNG.normal(size=(3, 3)) + 3.0)
    check_grads(lambda x, y: (x / y).sum(), [a, b])


def test_matmul_and_transpose():
    a = Tensor(RNG.normal(size=(3, 4)))
    b = Tensor(RNG.normal(size=(4, 2)))
    check_grads(lambda x, y: (x @ y).sum(), [a, b])
    c = Tensor(RNG.normal(size=(3, 4)))
    check_grads(lambda x: (x @ x.T).sum(), [c])


def test_exp_log():
    a = Tensor(RNG.normal(size=(2, 3)))
    check_grads(lambda x: x.exp().sum(), [a])
    b = Tensor(RNG.random((2, 3)) + 0.5)
    check_grads(lambda x: x.log().sum(), [b])


def test_sigmoid():
    a = Tensor(RNG.normal(size=(3, 3)))
    check_grads(lambda x: x.sigmoid().sum(), [a])
    # sigmoid(1) from the logistic definition
    assert Tensor(np.array([1.0])).sigmoid().data[0] == pytest.approx(
        0.7310585786300049, abs=1e-15
    )


def test_leaky_relu_elu():
    # keep values away from the kink where the derivative jumps
    vals = RNG.normal(size=(4, 4))
    vals[np.abs(vals) < 0.05] = 0.5
    check_grads(lambda x: x.leaky_relu(0.2).sum(), [Tensor(vals.copy())])
    check_grads(lambda x: x.elu().sum(), [Tensor(vals.copy())])


def test_clip_gradient_gate():
    a = Tensor(np.array([0.5, 2.0, -1.0]))
    out = a.clip(0.0, 1.0).sum()
    out.backward()
    # gradient flows only strictly inside the interval
    assert a.grad.tolist() == [1.0, 0.0, 0.0]


def test_sum_axis_keepdims():
    a = Tensor(RNG.normal(size=(3, 4)))
    check_grads(lambda x: (x.sum(axis=1, keepdims=True) * x).sum(), [a])
    b = Tensor(RNG.normal(size=(3, 4)))
    check_grads(lambda x: x.sum(axis=0).sum(), [b])


def test_mean():
    a = Tensor(RNG.normal(size=(5, 2)))
    a.mean().backward()
    assert np.allclose(a.grad, np.full((5, 2), 1.0 / 10.0))


def test_concat():
    a = Tensor(RNG.normal(size=(3, 2)))
    b = Tensor(RNG.normal(size=(3, 3)))
    weights = RNG.normal(size=(3, 5))
    check_grads(lambda x, y: (concat([x, y], axis=1) * weights).sum(), [a, b])


def test_backward_requires_scalar():
    a = Tensor(RNG.normal(size=(2, 2)))
    with pytest.raises(ValueError):
        (a * 2.0).backward()


def test_reused_node_accumulates():
    a = Tensor(np.array([3.0]))
    out = a * a + a
    out.backward()
    assert a.grad[0] == pytest.approx(2 * 3.0 + 1.0, abs=1e-12)


def test_masked_softmax_matches_dense():
    scores = Tensor(RNG.normal(size=(4, 4)))
    mask = np.ones((4, 4))
    out = masked_row_softmax(scores, mask)
    z = scores.data - scores.data.max(axis=1, keepdims=True)
    dense = np.exp(z) / np.exp(z).sum(axis=1, keepdims=True)
    assert np.allclose(out.data, dense, atol=1e-12)


def test_masked_softmax_rows_and_zeros():
    scores = Tensor(RNG.normal(size=(3, 3)))
    mask = np.array([[1, 1, 0], [0, 1, 0], [1, 1, 1]])
    out = masked_row_softmax(scores, mask)
    assert np.allclose(out.data.sum(axis=1), 1.0)
    assert (out.data[mask == 0] == 0.0).all()
    assert out.data[1, 1] == 1.0


def test_masked_softmax_gradient():
    scores = Tensor(RNG.normal(size=(3, 3)))
    mask = np.array([[1, 1, 0], [0, 1, 1], [1, 1, 1]], dtype=float)
    weights = RNG.normal(size=(3, 3))
    check_grads(lambda s: (masked_row_softmax(s, mask) * weights).sum(), [scores])


def test_masked_softmax_empty_row_rejected():
    scores = Tensor(np.zeros((2, 2)))
    with pytest.raises(ValueError):
        masked_row_softmax(scores, np.array([[1, 1], [0, 0]]))
