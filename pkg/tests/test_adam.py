"""Optimizer updates against hand evaluation and a scripted recurrence."""

import numpy as np
import pytest

from mpad.numcore import Adam, Tensor


def test_first_step_with_unit_gradient():
    # Bias correction makes the first step lr * g / (sqrt(g^2) + eps).
    theta = Tensor([[0.0]], requires_grad=True)
    opt = Adam({"theta": theta}, lr=0.001)
    theta.grad = np.array([[1.0]])
    opt.step()
    delta = theta.data[0, 0]
    assert abs(delta + 0.001 * 1.0 / (1.0 + 1e-8)) < 1e-9


def test_zero_gradient_fresh_state_leaves_params_unchanged():
    theta = Tensor(np.arange(4.0).reshape(2, 2), requires_grad=True)
    before = theta.data.copy()
    opt = Adam({"theta": theta})
    theta.grad = np.zeros((2, 2))
    opt.step()
    np.testing.assert_array_equal(theta.data, before)


def test_unset_gradient_treated_as_zero():
    theta = Tensor(np.ones((1, 2)), requires_grad=True)
    opt = Adam({"theta": theta})
    opt.step()
    np.testing.assert_array_equal(theta.data, np.ones((1, 2)))


def test_matches_scripted_recurrence_over_steps():
    """Independent transcription of the bias-corrected moment recurrences."""
    rng = np.random.default_rng(0)
    grads = [rng.standard_normal((3, 2)) for _ in range(7)]
    lr, b1, b2, eps = 0.01, 0.9, 0.999, 1e-8

    theta = Tensor(np.zeros((3, 2)), requires_grad=True)
    opt = Adam({"theta": theta}, lr=lr, beta1=b1, beta2=b2, eps=eps)
    for g in grads:
        theta.grad = g.copy()
        opt.step()

    # oracle: direct evaluation of the published recurrences
    x = np.zeros((3, 2))
    m = np.zeros((3, 2))
    v = np.zeros((3, 2))
    for t, g in enumerate(grads, start=1):
        m = b1 * m + (1 - b1) * g
        v = b2 * v + (1 - b2) * g * g
        m_hat = m / (1 - b1 ** t)
        v_hat = v / (1 - b2 ** t)
        x = x - lr * m_hat / (np.sqrt(v_hat) + eps)
    np.testing.assert_allclose(theta.data, x, atol=1e-15)


def test_constant_gradient_two_steps():
    theta = Tensor([[0.0]], requires_grad=True)
    opt = Adam({"theta": theta}, lr=0.1)
    for _ in range(2):
        theta.grad = np.array([[2.0]])
        opt.step()
    # with constant gradients the bias-corrected step is -lr * sign(g)
    np.testing.assert_allclose(theta.data, [[-0.2]], atol=1e-8)
    assert opt.t == 2


def test_gradient_shape_mismatch_rejected():
    theta = Tensor(np.zeros((2, 2)), requires_grad=True)
    opt = Adam({"theta": theta})
    theta.grad = np.zeros((1, 2))
    with pytest.raises(ValueError, match="shape"):
        opt.step()


def test_zero_grad_resets_all_parameters():
    a = Tensor(np.ones((1, 1)), requires_grad=True)
    b = Tensor(np.ones((2, 1)), requires_grad=True)
    opt = Adam({"a": a, "b": b})
    a.grad = np.array([[5.0]])
    opt.zero_grad()
    np.testing.assert_array_equal(a.grad, [[0.0]])
    np.testing.assert_array_equal(b.grad, np.zeros((2, 1)))
