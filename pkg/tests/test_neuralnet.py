import numpy as np
import pytest
from learners.neuralnet import (
    Activation,
    NetworkParams,
    OptimizerState,
    backward,
    forward,
    init_params,
    load_params,
    numeric_gradient,
    optimizer_step,
    param_count,
    save_params
)


def test_param_count():
    assert param_count((8, 16, 4)) == 9 * 16 + 17 * 4
    assert init_params((8, 16, 4), np.random.default_rng(0)).n_params == 212


def test_vector_shape_checked():
    with pytest.raises(ValueError, match="does not fit"):
        NetworkParams(layer_sizes=(2, 1), vector=np.zeros(4))


def test_forward_known_values():
    # W = [1, 1], b = 0 on input (1, 1)
    params = NetworkParams(layer_sizes=(2, 1), vector=np.array([1.0, 1.0, 0.0]))
    assert forward(params, np.array([1.0, 1.0])) == pytest.approx([2.0])


def test_identity_layer():
    eye = np.eye(3).ravel()
    params = NetworkParams(layer_sizes=(3, 3), vector=np.concatenate([eye, np.zeros(3)]))
    x = np.array([[-1.0, 0.5, 2.0], [3.0, -4.0, 0.0]])
    np.testing.assert_allclose(forward(params, x), x)


def test_hidden_relu_and_tanh_output():
    params = NetworkParams(
        layer_sizes=(1, 1, 1),
        vector=np.array([-1.0, 0.0, 1.0, 0.5]),
        output_activation=Activation.TANH
    )
    assert forward(params, np.array([2.0]))[0] == pytest.approx(np.tanh(0.5))
    assert forward(params, np.array([-2.0]))[0] == pytest.approx(np.tanh(2.5))


def test_input_width_checked():
    params = init_params((3, 2), np.random.default_rng(0))
    with pytest.raises(ValueError, match="width 3"):
        forward(params, np.zeros(4))


@pytest.mark.parametrize("activation", list(Activation))
def test_backward_matches_finite_differences(activation):
    rng = np.random.default_rng(3)
    params = init_params((8, 16, 4), rng, activation)
    x = rng.standard_normal((5, 8))
    upstream = rng.standard_normal((5, 4))
    grad, grad_x = backward(params, x, upstream)

    def loss(vector):
        return float(np.sum(upstream * forward(params.with_vector(vector), x)))

    numeric = numeric_gradient(loss, params.vector)
    assert np.max(np.abs(grad - numeric)) < 1e-4
    numeric_x = numeric_gradient(lambda v: float(np.sum(upstream * forward(params, v))), x)
    assert np.max(np.abs(grad_x - numeric_x)) < 1e-4


def test_zero_upstream_gives_zero_gradient():
    rng = np.random.default_rng(0)
    params = init_params((4, 6, 2), rng)
    grad, grad_x = backward(params, rng.standard_normal(4), np.zeros(2))
    assert not grad.any()
    assert not grad_x.any()


def test_scalar_weight_gradient():
    # y = w x + b, d/dw = x
    params = NetworkParams(layer_sizes=(1, 1), vector=np.array([2.0, 0.5]))
    grad, grad_x = backward(params, np.array([3.0]), np.array([1.0]))
    np.testing.assert_allclose(grad, [3.0, 1.0])
    np.testing.assert_allclose(grad_x, [2.0])


def test_upstream_shape_checked():
    params = init_params((2, 3), np.random.default_rng(0))
    with pytest.raises(ValueError, match="Output gradient"):
        backward(params, np.zeros(2), np.zeros(2))


def test_adam_first_step():
    params = NetworkParams(layer_sizes=(1, 1), vector=np.array([0.0, 0.0]))
    opt = OptimizerState.for_params(params, lr=1e-3)
    stepped = optimizer_step(opt, params, np.array([5.0, -0.2]))
    np.testing.assert_allclose(stepped.vector, [-1e-3, 1e-3], rtol=1e-5)
    assert opt.t == 1
    np.testing.assert_array_equal(params.vector, [0.0, 0.0])


def test_adam_zero_gradient_keeps_params():
    params = init_params((3, 2), np.random.default_rng(0))
    opt = OptimizerState.for_params(params, lr=1e-2)
    stepped = optimizer_step(opt, params, np.zeros(params.n_params))
    np.testing.assert_array_equal(stepped.vector, params.vector)


def test_adam_rejects_bad_learning_rate():
    params = init_params((3, 2), np.random.default_rng(0))
    with pytest.raises(ValueError, match="Learning rate"):
        OptimizerState.for_params(params, lr=0.0)


def test_init_bounds_and_seeding():
    params = init_params((16, 4), np.random.default_rng(5))
    assert np.all(np.abs(params.vector) <= 0.25)
    again = init_params((16, 4), np.random.default_rng(5))
    np.testing.assert_array_equal(params.vector, again.vector)
    other = init_params((16, 4), np.random.default_rng(6))
    assert not np.array_equal(params.vector, other.vector)


def test_layers_are_views():
    params = init_params((2, 3, 1), np.random.default_rng(0))
    w, b = params.layers()[1]
    w[0, 0] = 42.0
    assert params.vector[params.layer_slices()[1][0]][0] == 42.0
    assert b.shape == (1,)


def test_save_and_load(tmp_path):
    rng = np.random.default_rng(0)
    params = init_params((4, 8, 2), rng, Activation.TANH)
    opt = OptimizerState.for_params(params, lr=1e-3)
    params = optimizer_step(opt, params, rng.standard_normal(params.n_params))
    path = save_params(tmp_path / "net.npz", params, opt)
    loaded, loaded_opt = load_params(path)
    assert loaded.layer_sizes == (4, 8, 2)
    assert loaded.output_activation is Activation.TANH
    np.testing.assert_array_equal(loaded.vector, params.vector)
    assert loaded_opt.t == 1
    np.testing.assert_array_equal(loaded_opt.m, opt.m)

    bare, no_opt = load_params(save_params(tmp_path / "bare.npz", params))
    assert no_opt is None
    np.testing.assert_array_equal(bare.vector, params.vector)


def test_load_rejects_foreign_file(tmp_path):
    path = tmp_path / "foreign.npz"
    np.savez(path, something=np.zeros(3))
    with pytest.raises(ValueError, match="version"):
        load_params(path)
