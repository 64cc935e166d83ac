import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from arm_rl import nn
from arm_rl.nn import autodiff as ad
from gradcheck import check_leaves, check_params

TOL = 1e-4


# --------------------------------------------------------------------------- autodiff basics

def test_square_gradient_example():
    tape = nn.Tape()
    theta = tape.leaf(np.array(3.0), "theta")
    assert nn.backward(tape, ad.square(theta))["theta"] == pytest.approx(6.0)


def test_zero_output_grad_gives_zero_gradients():
    rng = np.random.default_rng(0)
    params = nn.init_params(nn.feature_architecture({"q": 10}), 0)
    tape = nn.Tape()
    out = nn.forward(params, rng.normal(size=(4, 9)), tape)["q"]
    grads = nn.backward(tape, out, np.zeros(out.shape))
    assert set(grads) == set(params.tensors)
    assert all(not g.any() for g in grads.values())


def test_tape_is_single_use():
    tape = nn.Tape()
    x = tape.leaf(np.ones(3), "x")
    y = ad.sum_(ad.square(x))
    nn.backward(tape, y)
    with pytest.raises(nn.TapeConsumedError):
        nn.backward(tape, y)
    with pytest.raises(nn.TapeConsumedError):
        tape.leaf(np.ones(1), "z")


def test_unused_leaf_gets_zero_gradient():
    tape = nn.Tape()
    x = tape.leaf(np.ones(2), "x")
    tape.leaf(np.ones((2, 3)), "unused")
    grads = nn.backward(tape, ad.sum_(x))
    np.testing.assert_array_equal(grads["unused"], np.zeros((2, 3)))


def test_shared_leaf_accumulates():
    tape = nn.Tape()
    x = tape.leaf(np.array([2.0]), "x")
    y = ad.sum_(x * x + x)  # d/dx = 2x + 1
    assert nn.backward(tape, y)["x"][0] == pytest.approx(5.0)


def test_mixing_tapes_is_rejected():
    a = nn.Tape().leaf(np.ones(2), "a")
    b = nn.Tape().leaf(np.ones(2), "b")
    with pytest.raises(ValueError):
        a + b


def test_broadcast_gradient_sums_back():
    tape = nn.Tape()
    x = tape.leaf(np.ones((4, 3)), "x")
    b = tape.leaf(np.zeros((1, 3)), "b")
    g = nn.backward(tape, ad.sum_(x + b))
    np.testing.assert_array_equal(g["b"], np.full((1, 3), 4.0))


# --------------------------------------------------------------------------- finite differences

@pytest.mark.parametrize("instance", range(20))
def test_fd_dense(instance):
    rng = np.random.default_rng(100 + instance)
    leaves = {"x": rng.normal(size=(3, 5)), "W": rng.normal(size=(5, 4)), "b": rng.normal(size=4)}
    w = rng.normal(size=(3, 4))
    err = check_leaves(lambda t, p: ad.sum_(ad.dense(p["x"], p["W"], p["b"]) * w), leaves)
    assert err < TOL


@pytest.mark.parametrize("instance", range(20))
def test_fd_conv(instance):
    rng = np.random.default_rng(100 + instance)
    stride = int(rng.integers(1, 3))
    leaves = {"x": rng.normal(size=(2, 7, 8, 3)), "W": rng.normal(size=(4, 3, 3, 3)), "b": rng.normal(size=4)}
    oh, ow = (7 - 3) // stride + 1, (8 - 3) // stride + 1
    w = rng.normal(size=(2, oh, ow, 4))
    err = check_leaves(lambda t, p: ad.sum_(ad.conv2d(p["x"], p["W"], p["b"], stride) * w), leaves, rng)
    assert err < TOL


@pytest.mark.parametrize("instance", range(20))
def test_fd_relu(instance):
    rng = np.random.default_rng(100 + instance)
    x = rng.normal(size=(4, 6))
    x[np.abs(x) < 1e-3] = 0.5  # keep away from the kink
    w = rng.normal(size=(4, 6))
    assert check_leaves(lambda t, p: ad.sum_(ad.relu(p["x"]) * w), {"x": x}) < TOL


@pytest.mark.parametrize("instance", range(20))
def test_fd_tanh(instance):
    rng = np.random.default_rng(100 + instance)
    w = rng.normal(size=(4, 6))
    assert check_leaves(lambda t, p: ad.sum_(ad.tanh(p["x"]) * w), {"x": rng.normal(size=(4, 6))}) < TOL


@pytest.mark.parametrize("instance", range(20))
def test_fd_softmax_cross_entropy(instance):
    rng = np.random.default_rng(100 + instance)
    labels = rng.integers(0, 5, 6)
    err = check_leaves(lambda t, p: ad.softmax_cross_entropy(p["z"], labels), {"z": rng.normal(size=(6, 5)) * 2})
    assert err < TOL


@pytest.mark.parametrize("instance", range(20))
def test_fd_log_softmax_composite(instance):
    rng = np.random.default_rng(100 + instance)
    labels = rng.integers(0, 5, 6)
    z = rng.normal(size=(6, 5))

    def ce(t, p):
        return ad.neg(ad.mean(ad.take_along(ad.log_softmax(p["z"]), labels)))

    assert check_leaves(ce, {"z": z}) < TOL
    # the composite and the fused op agree in value
    assert float(ce(None, {"z": nn.Tensor(z)}).value) == pytest.approx(
        float(ad.softmax_cross_entropy(nn.Tensor(z), labels).value), abs=1e-12)


@pytest.mark.parametrize("seed", range(5))
def test_fd_feature_network(seed):
    rng = np.random.default_rng(seed)
    arch = nn.feature_architecture({"logits": 10, "value": 1})
    arch["layers"][1] = {"kind": "tanh"}
    params = nn.init_params(arch, seed)
    x = rng.normal(size=(5, 9))
    w = rng.normal(size=(5, 10))

    def loss(p, tape):
        out = nn.forward(p, x, tape)
        return ad.sum_(out["logits"] * w) + ad.sum_(ad.square(out["value"]))

    assert check_params(loss, params, rng) < TOL


def test_fd_image_network():
    rng = np.random.default_rng(3)
    arch = {
        "input": [12, 14, 3],
        "layers": [{"kind": "conv", "filters": 4, "size": 3, "stride": 2}, {"kind": "relu"},
                   {"kind": "conv", "filters": 3, "size": 3, "stride": 1}, {"kind": "tanh"},
                   {"kind": "dense", "units": 8}, {"kind": "relu"}],
        "heads": {"q": 10},
    }
    params = nn.init_params(arch, 1)
    x = rng.uniform(0, 1, size=(2, 12, 14, 3))
    labels = rng.integers(0, 10, 2)
    assert check_params(lambda p, t: ad.softmax_cross_entropy(nn.forward(p, x, t)["q"], labels), params, rng) < TOL


# --------------------------------------------------------------------------- forward

def test_identity_dense_layer():
    arch = {"input": [4], "layers": [{"kind": "dense", "units": 4}], "heads": {"q": 4}}
    params = nn.init_params(arch, 0)
    params.tensors["0.W"] = np.eye(4)
    params.tensors["q.W"] = np.eye(4)
    x = np.random.default_rng(0).normal(size=(3, 4))
    np.testing.assert_array_equal(nn.forward(params, x)["q"].value, x)


def test_softmax_sums_to_one():
    params = nn.init_params(nn.feature_architecture({"logits": 10}), 0)
    params.tensors["logits.W"] *= 300  # far from uniform
    x = np.random.default_rng(1).normal(size=(16, 9))
    p = ad.softmax(nn.forward(params, x)["logits"]).value
    np.testing.assert_allclose(p.sum(axis=1), 1.0, atol=1e-12)


def test_forward_is_deterministic_and_checks_shape():
    params = nn.init_params(nn.image_architecture({"q": 10}), 5)
    x = np.random.default_rng(2).uniform(size=(2, 60, 80, 3))
    a = nn.forward(params, x)["q"].value
    b = nn.forward(params, x)["q"].value
    np.testing.assert_array_equal(a, b)
    assert a.shape == (2, 10)
    with pytest.raises(nn.ArchitectureError):
        nn.forward(params, np.zeros((1, 9)))


def test_downsample_frame():
    img = np.zeros((300, 400, 3), np.uint8)
    img[:5, :5] = 255
    img[5:10, :5, 0] = 51
    out = nn.downsample_frame(img)
    assert out.shape == (60, 80, 3)
    np.testing.assert_array_equal(out[0, 0], [1, 1, 1])
    assert out[1, 0, 0] == pytest.approx(0.2)
    assert out[2:].max() == 0


# --------------------------------------------------------------------------- init

def test_init_deterministic_per_seed():
    arch = nn.image_architecture({"logits": 10, "value": 1})
    a, b, c = nn.init_params(arch, 7), nn.init_params(arch, 7), nn.init_params(arch, 8)
    for k in a.tensors:
        np.testing.assert_array_equal(a.tensors[k], b.tensors[k])
    assert any(not np.array_equal(a.tensors[k], c.tensors[k]) for k in a.tensors if k.endswith("W"))


def test_init_bounds():
    arch = nn.image_architecture({"q": 10})
    p = nn.init_params(arch, 0)
    fan_ins = {"0.W": 3 * 5 * 5, "2.W": 8 * 3 * 3, "4.W": p.tensors["4.W"].shape[0]}
    for name, fan_in in fan_ins.items():
        assert np.abs(p.tensors[name]).max() <= math.sqrt(6 / fan_in)
    assert np.abs(p.tensors["q.W"]).max() <= 0.01
    assert all(not p.tensors[k].any() for k in p.tensors if k.endswith(".b"))
    assert p.tensors["0.W"].shape == (8, 3, 5, 5)
    assert p.tensors["4.W"].shape == (13 * 18 * 16, 128)


@pytest.mark.parametrize(
    "arch",
    [
        {"input": [9], "layers": [{"kind": "pool"}], "heads": {"q": 10}},
        {"input": [9], "layers": [], "heads": {}},
        {"input": [9], "layers": [{"kind": "conv", "filters": 2, "size": 3}], "heads": {"q": 2}},
        {"input": [4, 4, 3], "layers": [{"kind": "conv", "filters": 2, "size": 5}], "heads": {"q": 2}},
        {"layers": [], "heads": {"q": 2}},
    ],
)
def test_invalid_descriptor(arch):
    with pytest.raises(nn.ArchitectureError):
        nn.init_params(arch, 0)


# --------------------------------------------------------------------------- adam

def test_adam_single_step_by_hand():
    p = {"w": np.array([0.5, -1.0])}
    g = {"w": np.array([0.2, -0.4])}
    st_ = nn.AdamState(lr=0.1, beta1=0.8, beta2=0.9, eps=1e-8)
    out = nn.adam_step(p, g, st_)
    m = 0.2 * g["w"]
    v = 0.1 * g["w"] ** 2
    m_hat, v_hat = m / 0.2, v / 0.1
    expected = p["w"] - 0.1 * m_hat / (np.sqrt(v_hat) + 1e-8)
    np.testing.assert_allclose(out["w"], expected, atol=1e-12, rtol=0)
    np.testing.assert_array_equal(p["w"], [0.5, -1.0])  # input untouched
    assert st_.step == 1


def test_adam_zero_gradient_keeps_parameters():
    p = {"w": np.array([1.0, 2.0])}
    out = nn.adam_step(p, {"w": np.zeros(2)}, nn.AdamState())
    np.testing.assert_array_equal(out["w"], p["w"])


@given(st.floats(-10, 10).filter(lambda x: abs(x) > 1e-3))
@settings(max_examples=30)
def test_adam_constant_gradient_descends(g):
    p = {"w": np.array([0.0])}
    state = nn.AdamState(lr=0.01)
    for _ in range(50):
        p = nn.adam_step(p, {"w": np.array([g])}, state)
    assert np.sign(p["w"][0]) == -np.sign(g)


def test_adam_rejects_mismatch():
    with pytest.raises(ValueError):
        nn.adam_step({"w": np.zeros(2)}, {"v": np.zeros(2)}, nn.AdamState())
    with pytest.raises(ValueError):
        nn.adam_step({"w": np.zeros(2)}, {"w": np.zeros(3)}, nn.AdamState())


# --------------------------------------------------------------------------- checkpoints

@pytest.mark.parametrize("arch", [nn.feature_architecture({"logits": 10, "value": 1}), nn.image_architecture({"q": 10})])
def test_checkpoint_round_trip_bit_exact(tmp_path, arch):
    params = nn.init_params(arch, 3)
    params.tensors["q.b" if "q" in arch["heads"] else "value.b"][:] = [np.pi] * (10 if "q" in arch["heads"] else 1)
    path = tmp_path / "net.ckpt"
    nn.save_params(path, params, {"agent": "x", "step": 12})
    back, meta = nn.load_params(path)
    assert meta == {"agent": "x", "step": 12}
    assert back.arch == params.arch
    assert set(back.tensors) == set(params.tensors)
    for k, v in params.tensors.items():
        assert back.tensors[k].tobytes() == v.tobytes()
    nn.save_params(tmp_path / "again.ckpt", back, meta)
    assert (tmp_path / "again.ckpt").read_bytes() == path.read_bytes()


def test_checkpoint_rejects_garbage_and_mismatch(tmp_path):
    bad = tmp_path / "bad.ckpt"
    bad.write_bytes(b"not a checkpoint")
    with pytest.raises(ValueError):
        nn.load_params(bad)
    params = nn.init_params(nn.feature_architecture({"q": 10}), 0)
    params.tensors["q.W"] = np.zeros((3, 10))
    nn.save_params(tmp_path / "m.ckpt", params)
    with pytest.raises(nn.ArchitectureError):
        nn.load_params(tmp_path / "m.ckpt")
