import numpy as np
import pytest

from semcom.errors import CorruptPayloadError, ShapeError
from semcom.qnet import Mlp, SgdMomentum, load_qnet, save_qnet, td_loss_and_gradients

from _reference import finite_difference_gradients, gradient_relative_error


def test_zero_input_zero_params_outputs_zero():
    net = Mlp.from_params([3, 4, 2], [np.zeros((3, 4)), np.zeros((4, 2))], [np.zeros(4), np.zeros(2)])
    out, _ = net.forward(np.zeros((1, 3)))
    assert np.array_equal(out, np.zeros((1, 2)))


def test_single_linear_layer_identity():
    net = Mlp.from_params([3, 3], [np.eye(3)], [np.zeros(3)])
    x = np.array([[0.1, -0.5, 2.0]])
    out, _ = net.forward(x)
    assert np.array_equal(out, x)


def test_init_bounds_respect_fan_in():
    rng = np.random.default_rng(0)
    net = Mlp([16, 64, 4], rng)
    assert np.max(np.abs(net.weights[0])) <= 1.0 / 4.0
    assert np.max(np.abs(net.weights[1])) <= 1.0 / 8.0


def test_forward_shape_check():
    net = Mlp([5, 8, 2], np.random.default_rng(1))
    with pytest.raises(ShapeError):
        net.forward(np.zeros((2, 4)))


@pytest.mark.parametrize("seed", range(20))
def test_gradient_check_against_central_differences(seed):
    rng = np.random.default_rng(seed)
    sizes = [int(rng.integers(2, 5)) for _ in range(3)]
    net = Mlp(sizes, rng)
    batch = 4
    states = rng.normal(size=(batch, sizes[0]))
    actions = rng.integers(0, sizes[-1], size=batch)
    targets = rng.normal(size=batch)
    _, dw, db = td_loss_and_gradients(net, states, actions, targets)
    fdw, fdb = finite_difference_gradients(net, states, actions, targets)
    for a, b in zip(dw + db, fdw + fdb):
        assert gradient_relative_error(a, b) < 1e-4


def test_td_loss_value():
    net = Mlp.from_params([2, 2], [np.zeros((2, 2))], [np.array([1.0, 3.0])])
    states = np.zeros((2, 2))
    actions = np.array([0, 1])
    targets = np.array([0.0, 1.0])
    loss, _, _ = td_loss_and_gradients(net, states, actions, targets)
    # errors are (1-0) and (3-1): mean of 1 and 4
    assert loss == 2.5


def test_sgd_momentum_update_rule():
    net = Mlp.from_params([1, 1], [np.array([[1.0]])], [np.array([0.0])])
    opt = SgdMomentum(net, learning_rate=0.1, momentum=0.9)
    opt.step(net, [np.array([[1.0]])], [np.array([0.5])])
    assert np.isclose(net.weights[0][0, 0], 0.9)
    assert np.isclose(net.biases[0][0], -0.05)
    opt.step(net, [np.array([[1.0]])], [np.array([0.0])])
    # velocity = 0.9*(-0.1) - 0.1 = -0.19
    assert np.isclose(net.weights[0][0, 0], 0.71)


def test_checkpoint_round_trip_bit_exact(tmp_path):
    rng = np.random.default_rng(7)
    net = Mlp([4, 8, 3], rng)
    path = tmp_path / "agent.bin"
    save_qnet(net, path)
    data = path.read_bytes()
    assert data[:4] == b"DQN1"
    back = load_qnet(path)
    assert back.sizes == net.sizes
    for a, b in zip(net.weights + net.biases, back.weights + back.biases):
        assert np.array_equal(a, b)


def test_checkpoint_rejects_corruption(tmp_path):
    rng = np.random.default_rng(8)
    net = Mlp([2, 2], rng)
    path = tmp_path / "agent.bin"
    save_qnet(net, path)
    raw = path.read_bytes()
    bad = tmp_path / "bad.bin"
    bad.write_bytes(b"XXXX" + raw[4:])
    with pytest.raises(CorruptPayloadError):
        load_qnet(bad)
    short = tmp_path / "short.bin"
    short.write_bytes(raw + b"\x00")
    with pytest.raises(CorruptPayloadError):
        load_qnet(short)
